// Copyright 2026 The PVSID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PVSID_PVSID_H_
#define PVSID_PVSID_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pvsid/adamw.h"
#include "pvsid/common.h"
#include "pvsid/io_log.h"
#include "pvsid/mlp.h"

namespace pvsid {

// One training/evaluation unit. For the window starting at log row t, the
// past block covers rows [t, t + h_p) and the future block rows
// [t + h_p, t + h_p + h_f). Rows are time steps, columns channels.
struct WindowSample {
  MatrixXd u_past;    // h_p x n_u
  MatrixXd y_past;    // h_p x n_y
  MatrixXd u_future;  // h_f x n_u
  MatrixXd w_future;  // h_f x n_w
};

// Exactly log.size() - h_p - h_f + 1 windows.
std::vector<WindowSample> MakeWindows(const IoLog& log, int h_p, int h_f);

struct ChannelStats {
  VectorXd mean;
  VectorXd std;  // floored at kStdFloor

  VectorXd Normalize(const Eigen::Ref<const VectorXd>& raw) const;
  VectorXd Denormalize(const Eigen::Ref<const VectorXd>& normalized) const;
};

inline constexpr double kStdFloor = 1e-9;

struct NormStats {
  ChannelStats u;
  ChannelStats y;  // raw y channels, in log order
  ChannelStats w;
};

// Population mean/std per channel. u pools past and future blocks, y the past
// blocks, w the future blocks.
NormStats ComputeNormStats(const std::vector<WindowSample>& windows);

// The identified model: estimator (u_past, y_past) -> x_hat and predictor
// (x_hat, u_future) -> w_future. Network inputs and outputs are standardized
// with `stats`; the estimator sees only the y channels listed in
// `y_channels`, in that order.
//
// Flattening is time-major: the estimator input is
//   [u(0), y_sel(0), u(1), y_sel(1), ..., u(h_p-1), y_sel(h_p-1)],
// the predictor input is [x_hat, u_f(0), ..., u_f(h_f-1)], and the predictor
// output is [w(0), ..., w(h_f-1)].
struct PvsidModel {
  int h_p = 0;
  int h_f = 0;
  int n_u = 0;
  int n_y = 0;  // raw y channels expected from the caller
  int n_w = 0;
  int n_xhat = 0;
  double gamma = 1.0;
  std::vector<int> y_channels;
  NormStats stats;
  Mlpd estimator;
  Mlpd predictor;
  std::string train_fingerprint;

  int estimator_input_dim() const {
    return h_p * (n_u + static_cast<int>(y_channels.size()));
  }
  int predictor_input_dim() const { return n_xhat + h_f * n_u; }
  int predictor_output_dim() const { return h_f * n_w; }

  // Throws InvalidArgument on inconsistent shapes or gamma outside (0, 1].
  void Validate() const;
};

// Per-coordinate loss weights of the predictor output: gamma^k on step k.
VectorXd DiscountWeights(int h_f, int n_w, double gamma);

// Normalized, flattened network inputs.
VectorXd EstimatorInput(const PvsidModel& model, const Eigen::Ref<const MatrixXd>& u_past,
                        const Eigen::Ref<const MatrixXd>& y_past);
VectorXd PredictorInput(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                        const Eigen::Ref<const MatrixXd>& u_future);

VectorXd EstimateState(const PvsidModel& model, const Eigen::Ref<const MatrixXd>& u_past,
                       const Eigen::Ref<const MatrixXd>& y_past);

// h_f x n_w prediction in raw units, one forward pass.
MatrixXd PredictFuture(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                       const Eigen::Ref<const MatrixXd>& u_future);

// Windows packed into normalized column-per-sample matrices.
struct PackedWindows {
  MatrixXd estimator_inputs;  // estimator_input_dim x N
  MatrixXd u_future;          // h_f * n_u x N (normalized)
  MatrixXd targets;           // h_f * n_w x N (normalized)

  Index size() const { return estimator_inputs.cols(); }
};

PackedWindows PackWindows(const PvsidModel& model, const std::vector<WindowSample>& windows);

// Normalized predictor outputs for packed windows (columns).
MatrixXd PredictPacked(const PvsidModel& model, const PackedWindows& packed);

// (1/N) sum_t sum_k gamma^(k-1) ||(w_f - P(E(u_p, y_p), u_f))_k||^2 on
// standardized w channels.
double DiscountedLoss(const PvsidModel& model, const std::vector<WindowSample>& batch);
double DiscountedLoss(const PvsidModel& model, const PackedWindows& packed);

// Mean squared k-step prediction error in raw units, k = 1..h_f.
VectorXd KStepMse(const PvsidModel& model, const std::vector<WindowSample>& windows);

enum class LearningRateSchedule { kConstant, kCosine };

struct TrainConfig {
  int n_xhat = 8;
  double gamma = 0.9;
  int epochs = 150;
  int batch_size = 256;
  std::uint64_t seed = 1;
  std::vector<int> estimator_hidden = {32, 32, 32};
  std::vector<int> predictor_hidden = {128, 128, 128};
  // Raw y channels fed to the estimator; empty means all.
  std::vector<int> y_channels;
  AdamWOptions optimizer;
  LearningRateSchedule schedule = LearningRateSchedule::kCosine;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
};

struct TrainResult {
  PvsidModel model;  // parameters of the epoch with the lowest validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shapes and channel layout of a fresh model with He-initialized networks.
PvsidModel InitModel(const TrainConfig& config, int h_p, int h_f, int n_u, int n_y,
                     int n_w, const NormStats& stats);

// Minimizes DiscountedLoss on `train` with shuffled mini-batch AdamW and keeps
// the parameters with the lowest validation loss (earliest on ties).
// Throws TrainingFailure when a loss turns non-finite.
TrainResult Train(const std::vector<WindowSample>& train,
                  const std::vector<WindowSample>& val, const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace pvsid

#endif  // PVSID_PVSID_H_
