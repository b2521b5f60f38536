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

#ifndef PVSID_NMPC_H_
#define PVSID_NMPC_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pvsid/common.h"
#include "pvsid/kinematics.h"
#include "pvsid/plant.h"
#include "pvsid/pvsid.h"

namespace pvsid {

struct NmpcConfig {
  double zeta = 0.5;     // input-rate weight
  double lambda = 1e-7;  // LM damping
  int max_iterations = 5;

  void Validate() const;
};

// Tracking-plus-smoothness residual, length h_f * (n_u + n_w):
//   top    = (P(x_hat, u_f) - r_f) / w_std       (h_f * n_w rows, time-major)
//   bottom = zeta * Delta(u_f) / u_std           (h_f * n_u rows, time-major)
// with Delta(u_f) = [u_last; u_f(0 .. h_f-2)] - u_f. `u_future` is h_f x n_u,
// `reference` h_f x n_w, both raw units.
VectorXd Residual(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                  const Eigen::Ref<const MatrixXd>& u_future,
                  const Eigen::Ref<const VectorXd>& u_last,
                  const Eigen::Ref<const MatrixXd>& reference, double zeta);

// d Residual / d vec(u_future), vec taken time-major. Independent of u_last
// and the reference.
MatrixXd ResidualJacobian(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                          const Eigen::Ref<const MatrixXd>& u_future, double zeta);

using ResidualFn = std::function<VectorXd(const VectorXd&)>;
using JacobianFn = std::function<MatrixXd(const VectorXd&)>;

struct LmResult {
  VectorXd solution;
  // 0.5 |l|^2 at the start and after each iteration (iterations + 1 entries).
  std::vector<double> cost_trace;
};

// Fixed-count Levenberg-Marquardt: u <- u - (J^T J + lambda I)^{-1} J^T l(u),
// solved by Cholesky, no line search. Throws NumericError on a non-finite
// residual or a failed factorization (message names the iteration).
LmResult LmIterate(const ResidualFn& residual, const JacobianFn& jacobian, VectorXd u0,
                   double lambda, int iterations);

// Rolling controller memory.
struct NmpcState {
  MatrixXd u_past;  // h_p x n_u, oldest row first
  MatrixXd y_past;  // h_p x n_y
  Index rows_seen = 0;
  MatrixXd plan;  // h_f x n_u, previous optimized input sequence
  bool has_plan = false;
  std::int64_t cycle = 0;

  bool warmed_up() const { return rows_seen >= u_past.rows(); }
};

NmpcState InitNmpcState(const PvsidModel& model);

// Appends one completed log row (u_t, y_t), dropping the oldest.
void PushHistory(NmpcState& state, const Eigen::Ref<const VectorXd>& u,
                 const Eigen::Ref<const VectorXd>& y);

struct MpcStepResult {
  VectorXd u;  // input to apply now
  std::vector<double> cost_trace;
};

// One receding-horizon cycle. Pushes the latest completed row (u_prev,
// y_prev), estimates x_hat, warm-starts from the previous plan shifted one
// step (last entry duplicated) or, on the first cycle, from `cold_start`
// (h_f x n_u; if empty, u_prev held), runs LM and returns the first input.
// Throws NotWarmedUp when fewer than h_p rows have been seen.
MpcStepResult MpcStep(const PvsidModel& model, const NmpcConfig& config, NmpcState& state,
                      const Eigen::Ref<const VectorXd>& y_prev,
                      const Eigen::Ref<const VectorXd>& u_prev,
                      const Eigen::Ref<const MatrixXd>& reference,
                      const MatrixXd& cold_start = MatrixXd());

enum class ControllerKind { kNmpc, kIkFeedforward };

const char* ControllerName(ControllerKind kind);

struct ControlLog {
  double period = 0.02;
  int warmup_steps = 0;
  MatrixXd reference;  // N x 2
  MatrixXd measured;   // N x 2, tip measurement w
  MatrixXd applied;    // N x 2, joint reference u
  std::vector<std::vector<double>> costs;  // per-cycle LM cost traces (NMPC only)

  Index size() const { return reference.rows(); }
  // Mean of |w - r|^2 over the tracking section, m^2.
  double TipMse() const;
  double TipRms() const;
};

struct ClosedLoopOptions {
  ControllerKind controller = ControllerKind::kNmpc;
  NmpcConfig nmpc;
  // Hold steps before tracking; the NMPC needs at least model.h_p.
  int warmup_steps = 0;
};

// Holds the arm at the trajectory start for the warm-up, then tracks the
// trajectory. Measurements, noise, and the vibration excitation follow
// SimulateLog, so runs with the same seed share noise realizations.
// `model` may be null for the IK feedforward baseline.
ControlLog RunClosedLoop(const PlantParams& params, const PvsidModel* model,
                         const ClosedLoopOptions& options, const Trajectory& trajectory,
                         std::uint64_t seed);

// CSV `t,rx,ry,wx,wy,u1,u2,cost0..costK`, then a `# tip_mse_mm2=...` line.
void WriteControlLogCsv(std::ostream& os, const ControlLog& log,
                        const std::string& comment = "");

}  // namespace pvsid

#endif  // PVSID_NMPC_H_
