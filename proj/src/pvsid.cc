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

#include "pvsid/pvsid.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace pvsid {
namespace {

ChannelStats StatsOf(const std::vector<const MatrixXd*>& blocks, Index channels) {
  ChannelStats s;
  s.mean = VectorXd::Zero(channels);
  s.std = VectorXd::Zero(channels);
  double count = 0;
  for (const MatrixXd* b : blocks) {
    s.mean += b->colwise().sum().transpose();
    count += static_cast<double>(b->rows());
  }
  s.mean /= count;
  for (const MatrixXd* b : blocks) {
    s.std += (b->rowwise() - s.mean.transpose()).cwiseAbs2().colwise().sum().transpose();
  }
  s.std = (s.std / count).cwiseSqrt().cwiseMax(kStdFloor);
  return s;
}

void CheckBlock(const Eigen::Ref<const MatrixXd>& block, Index rows, Index cols,
                const char* name) {
  if (block.rows() != rows || block.cols() != cols) {
    throw InvalidArgument(std::string(name) + ": expected " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", got " + std::to_string(block.rows()) +
                          "x" + std::to_string(block.cols()));
  }
}

std::vector<int> WithEnds(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

// Flattens a normalized (steps x channels) block time-major into `out`.
template <typename Derived>
void FlattenTimeMajor(const MatrixXd& block, const ChannelStats& stats,
                      Eigen::DenseBase<Derived>& out) {
  const Index c = block.cols();
  for (Index t = 0; t < block.rows(); ++t) {
    out.segment(t * c, c) =
        (block.row(t).transpose() - stats.mean).cwiseQuotient(stats.std);
  }
}

}  // namespace

std::vector<WindowSample> MakeWindows(const IoLog& log, int h_p, int h_f) {
  log.Validate();
  if (h_p < 1 || h_f < 1) throw InvalidArgument("MakeWindows: horizons must be >= 1");
  const Index needed = Index{h_p} + h_f;
  if (log.size() < needed) {
    throw InvalidArgument("MakeWindows: log has " + std::to_string(log.size()) +
                          " rows, needs at least h_p + h_f = " + std::to_string(needed));
  }
  std::vector<WindowSample> windows;
  const Index count = log.size() - needed + 1;
  windows.reserve(static_cast<size_t>(count));
  for (Index t = 0; t < count; ++t) {
    WindowSample s;
    s.u_past = log.u.middleRows(t, h_p);
    s.y_past = log.y.middleRows(t, h_p);
    s.u_future = log.u.middleRows(t + h_p, h_f);
    s.w_future = log.w.middleRows(t + h_p, h_f);
    windows.push_back(std::move(s));
  }
  return windows;
}

VectorXd ChannelStats::Normalize(const Eigen::Ref<const VectorXd>& raw) const {
  return (raw - mean).cwiseQuotient(std);
}

VectorXd ChannelStats::Denormalize(const Eigen::Ref<const VectorXd>& normalized) const {
  return normalized.cwiseProduct(std) + mean;
}

NormStats ComputeNormStats(const std::vector<WindowSample>& windows) {
  if (windows.empty()) throw InvalidArgument("ComputeNormStats: no windows");
  std::vector<const MatrixXd*> u, y, w;
  for (const WindowSample& s : windows) {
    u.push_back(&s.u_past);
    u.push_back(&s.u_future);
    y.push_back(&s.y_past);
    w.push_back(&s.w_future);
  }
  const WindowSample& first = windows.front();
  NormStats stats;
  stats.u = StatsOf(u, first.u_past.cols());
  stats.y = StatsOf(y, first.y_past.cols());
  stats.w = StatsOf(w, first.w_future.cols());
  return stats;
}

void PvsidModel::Validate() const {
  if (h_p < 1 || h_f < 1 || n_u < 1 || n_w < 1 || n_xhat < 1 || n_y < 0) {
    throw InvalidArgument("PvsidModel: horizons and dims must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw InvalidArgument("PvsidModel: gamma must be in (0, 1]");
  }
  for (int c : y_channels) {
    if (c < 0 || c >= n_y) throw InvalidArgument("PvsidModel: y channel out of range");
  }
  if (stats.u.mean.size() != n_u || stats.u.std.size() != n_u ||
      stats.w.mean.size() != n_w || stats.w.std.size() != n_w ||
      stats.y.mean.size() != n_y || stats.y.std.size() != n_y) {
    throw InvalidArgument("PvsidModel: normalization stats do not match dims");
  }
  if (estimator.input_dim() != estimator_input_dim() || estimator.output_dim() != n_xhat ||
      predictor.input_dim() != predictor_input_dim() ||
      predictor.output_dim() != predictor_output_dim()) {
    throw InvalidArgument("PvsidModel: network shapes do not match horizons");
  }
}

VectorXd DiscountWeights(int h_f, int n_w, double gamma) {
  VectorXd weights(Index{h_f} * n_w);
  double factor = 1.0;
  for (int k = 0; k < h_f; ++k) {
    weights.segment(Index{k} * n_w, n_w).setConstant(factor);
    factor *= gamma;
  }
  return weights;
}

VectorXd EstimatorInput(const PvsidModel& model, const Eigen::Ref<const MatrixXd>& u_past,
                        const Eigen::Ref<const MatrixXd>& y_past) {
  CheckBlock(u_past, model.h_p, model.n_u, "EstimatorInput u_past");
  CheckBlock(y_past, model.h_p, model.n_y, "EstimatorInput y_past");
  const Index n_sel = static_cast<Index>(model.y_channels.size());
  const Index stride = model.n_u + n_sel;
  VectorXd x(model.estimator_input_dim());
  for (Index t = 0; t < model.h_p; ++t) {
    x.segment(t * stride, model.n_u) = (u_past.row(t).transpose() - model.stats.u.mean)
                                           .cwiseQuotient(model.stats.u.std);
    for (Index j = 0; j < n_sel; ++j) {
      const int c = model.y_channels[static_cast<size_t>(j)];
      x(t * stride + model.n_u + j) =
          (y_past(t, c) - model.stats.y.mean(c)) / model.stats.y.std(c);
    }
  }
  return x;
}

VectorXd PredictorInput(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                        const Eigen::Ref<const MatrixXd>& u_future) {
  if (xhat.size() != model.n_xhat) {
    throw InvalidArgument("PredictorInput: x_hat has wrong dimension");
  }
  CheckBlock(u_future, model.h_f, model.n_u, "PredictorInput u_future");
  VectorXd x(model.predictor_input_dim());
  x.head(model.n_xhat) = xhat;
  auto tail = x.tail(Index{model.h_f} * model.n_u);
  FlattenTimeMajor(u_future, model.stats.u, tail);
  return x;
}

VectorXd EstimateState(const PvsidModel& model, const Eigen::Ref<const MatrixXd>& u_past,
                       const Eigen::Ref<const MatrixXd>& y_past) {
  return Forward<double>(model.estimator, EstimatorInput(model, u_past, y_past));
}

MatrixXd PredictFuture(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                       const Eigen::Ref<const MatrixXd>& u_future) {
  const VectorXd out = Forward<double>(model.predictor, PredictorInput(model, xhat, u_future));
  MatrixXd w(model.h_f, model.n_w);
  for (Index k = 0; k < model.h_f; ++k) {
    w.row(k) = model.stats.w.Denormalize(out.segment(k * model.n_w, model.n_w)).transpose();
  }
  return w;
}

PackedWindows PackWindows(const PvsidModel& model, const std::vector<WindowSample>& windows) {
  const Index n = static_cast<Index>(windows.size());
  PackedWindows packed;
  packed.estimator_inputs.resize(model.estimator_input_dim(), n);
  packed.u_future.resize(Index{model.h_f} * model.n_u, n);
  packed.targets.resize(model.predictor_output_dim(), n);
  for (Index i = 0; i < n; ++i) {
    const WindowSample& s = windows[static_cast<size_t>(i)];
    CheckBlock(s.w_future, model.h_f, model.n_w, "PackWindows w_future");
    packed.estimator_inputs.col(i) = EstimatorInput(model, s.u_past, s.y_past);
    packed.u_future.col(i) =
        PredictorInput(model, VectorXd::Zero(model.n_xhat), s.u_future).tail(packed.u_future.rows());
    auto target = packed.targets.col(i);
    FlattenTimeMajor(s.w_future, model.stats.w, target);
  }
  return packed;
}

MatrixXd PredictPacked(const PvsidModel& model, const PackedWindows& packed) {
  const MatrixXd xhat = ForwardBatch<double>(model.estimator, packed.estimator_inputs);
  MatrixXd pred_in(model.predictor_input_dim(), packed.size());
  pred_in.topRows(model.n_xhat) = xhat;
  pred_in.bottomRows(packed.u_future.rows()) = packed.u_future;
  return ForwardBatch<double>(model.predictor, pred_in);
}

double DiscountedLoss(const PvsidModel& model, const PackedWindows& packed) {
  if (packed.size() == 0) throw InvalidArgument("DiscountedLoss: empty batch");
  const VectorXd weights = DiscountWeights(model.h_f, model.n_w, model.gamma);
  // Chunked to bound memory on large validation sets.
  constexpr Index kChunk = 4096;
  double total = 0.0;
  for (Index begin = 0; begin < packed.size(); begin += kChunk) {
    const Index count = std::min(kChunk, packed.size() - begin);
    PackedWindows chunk;
    chunk.estimator_inputs = packed.estimator_inputs.middleCols(begin, count);
    chunk.u_future = packed.u_future.middleCols(begin, count);
    const MatrixXd error =
        PredictPacked(model, chunk) - packed.targets.middleCols(begin, count);
    total += (weights.asDiagonal() * error.cwiseAbs2()).sum();
  }
  return total / static_cast<double>(packed.size());
}

double DiscountedLoss(const PvsidModel& model, const std::vector<WindowSample>& batch) {
  if (batch.empty()) throw InvalidArgument("DiscountedLoss: empty batch");
  return DiscountedLoss(model, PackWindows(model, batch));
}

VectorXd KStepMse(const PvsidModel& model, const std::vector<WindowSample>& windows) {
  if (windows.empty()) throw InvalidArgument("KStepMse: empty test set");
  const PackedWindows packed = PackWindows(model, windows);
  const MatrixXd pred = PredictPacked(model, packed);
  VectorXd mse = VectorXd::Zero(model.h_f);
  for (Index i = 0; i < packed.size(); ++i) {
    const MatrixXd& truth = windows[static_cast<size_t>(i)].w_future;
    for (Index k = 0; k < model.h_f; ++k) {
      const VectorXd raw =
          model.stats.w.Denormalize(pred.col(i).segment(k * model.n_w, model.n_w));
      mse(k) += (truth.row(k).transpose() - raw).squaredNorm();
    }
  }
  return mse / static_cast<double>(packed.size());
}

PvsidModel InitModel(const TrainConfig& config, int h_p, int h_f, int n_u, int n_y,
                     int n_w, const NormStats& stats) {
  PvsidModel model;
  model.h_p = h_p;
  model.h_f = h_f;
  model.n_u = n_u;
  model.n_y = n_y;
  model.n_w = n_w;
  model.n_xhat = config.n_xhat;
  model.gamma = config.gamma;
  model.stats = stats;
  if (config.y_channels.empty()) {
    model.y_channels.resize(static_cast<size_t>(n_y));
    std::iota(model.y_channels.begin(), model.y_channels.end(), 0);
  } else {
    model.y_channels = config.y_channels;
  }
  if (config.n_xhat < 1) throw InvalidArgument("InitModel: n_xhat must be >= 1");
  std::mt19937_64 seeder(config.seed);
  const std::uint64_t estimator_seed = seeder();
  const std::uint64_t predictor_seed = seeder();
  model.estimator = InitMlp<double>(
      WithEnds(model.estimator_input_dim(), config.estimator_hidden, config.n_xhat),
      estimator_seed);
  model.predictor = InitMlp<double>(
      WithEnds(model.predictor_input_dim(), config.predictor_hidden,
               model.predictor_output_dim()),
      predictor_seed);
  model.Validate();
  return model;
}

TrainResult Train(const std::vector<WindowSample>& train,
                  const std::vector<WindowSample>& val, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train.empty() || val.empty()) throw InvalidArgument("Train: empty split");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw InvalidArgument("Train: epochs and batch_size must be >= 1");
  }
  const WindowSample& first = train.front();
  PvsidModel model = InitModel(
      config, static_cast<int>(first.u_past.rows()), static_cast<int>(first.u_future.rows()),
      static_cast<int>(first.u_past.cols()), static_cast<int>(first.y_past.cols()),
      static_cast<int>(first.w_future.cols()), ComputeNormStats(train));

  const PackedWindows train_packed = PackWindows(model, train);
  const PackedWindows val_packed = PackWindows(model, val);
  const VectorXd weights = DiscountWeights(model.h_f, model.n_w, model.gamma);

  AdamWState<double> estimator_opt(model.estimator.parameter_count(), config.optimizer);
  AdamWState<double> predictor_opt(model.predictor.parameter_count(), config.optimizer);

  std::mt19937_64 seeder(config.seed);
  seeder.discard(2);
  std::mt19937_64 shuffle_rng(seeder());

  const Index n = train_packed.size();
  const Index batch = std::min<Index>(config.batch_size, n);
  const Index batches_per_epoch = (n + batch - 1) / batch;
  const Index total_steps = batches_per_epoch * config.epochs;
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  MatrixXd est_in, pred_in, targets;
  MlpTrace<double> est_trace, pred_trace;
  VectorXd est_grad, pred_grad;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  PvsidModel best = model;
  int last_finite_epoch = -1;
  Index step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (Index begin = 0; begin < n; begin += batch) {
      const Index count = std::min(batch, n - begin);
      est_in.resize(train_packed.estimator_inputs.rows(), count);
      pred_in.resize(model.predictor_input_dim(), count);
      targets.resize(train_packed.targets.rows(), count);
      for (Index j = 0; j < count; ++j) {
        const Index src = order[static_cast<size_t>(begin + j)];
        est_in.col(j) = train_packed.estimator_inputs.col(src);
        pred_in.col(j).tail(train_packed.u_future.rows()) = train_packed.u_future.col(src);
        targets.col(j) = train_packed.targets.col(src);
      }
      pred_in.topRows(model.n_xhat) = ForwardTraced<double>(model.estimator, est_in, &est_trace);
      const MatrixXd error =
          ForwardTraced<double>(model.predictor, pred_in, &pred_trace) - targets;
      const double inv_count = 1.0 / static_cast<double>(count);
      const double loss = (weights.asDiagonal() * error.cwiseAbs2()).sum() * inv_count;
      if (!std::isfinite(loss)) {
        throw TrainingFailure("Train: non-finite loss in epoch " + std::to_string(epoch),
                              last_finite_epoch);
      }
      epoch_loss += loss * static_cast<double>(count);
      const MatrixXd output_grad = (2.0 * inv_count) * (weights.asDiagonal() * error);
      const MatrixXd input_grad =
          Backward<double>(model.predictor, pred_trace, output_grad, &pred_grad);
      Backward<double>(model.estimator, est_trace, input_grad.topRows(model.n_xhat),
                       &est_grad);

      double scale = 1.0;
      if (config.schedule == LearningRateSchedule::kCosine) {
        scale = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                      static_cast<double>(total_steps)));
      }
      try {
        AdamWStep<double>(model.estimator.parameters(), est_grad, estimator_opt, scale);
        AdamWStep<double>(model.predictor.parameters(), pred_grad, predictor_opt, scale);
      } catch (const NumericError& e) {
        throw TrainingFailure(std::string("Train: ") + e.what(), last_finite_epoch);
      }
      ++step;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(n);
    record.val_loss = DiscountedLoss(model, val_packed);
    if (!std::isfinite(record.train_loss) || !std::isfinite(record.val_loss)) {
      throw TrainingFailure("Train: non-finite loss in epoch " + std::to_string(epoch),
                            last_finite_epoch);
    }
    last_finite_epoch = epoch;
    if (record.val_loss < best_val) {
      best_val = record.val_loss;
      best = model;
      result.best_epoch = epoch;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  result.model = std::move(best);
  return result;
}

}  // namespace pvsid
