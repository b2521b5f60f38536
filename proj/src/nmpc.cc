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

#include "pvsid/nmpc.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>

#include "pvsid/csv.h"

namespace pvsid {
namespace {

// Row-by-row (time-major) flattening of a steps x channels block.
VectorXd FlattenRows(const Eigen::Ref<const MatrixXd>& block) {
  VectorXd v(block.size());
  for (Index t = 0; t < block.rows(); ++t) {
    v.segment(t * block.cols(), block.cols()) = block.row(t).transpose();
  }
  return v;
}

MatrixXd UnflattenRows(const Eigen::Ref<const VectorXd>& v, Index rows, Index cols) {
  MatrixXd block(rows, cols);
  for (Index t = 0; t < rows; ++t) block.row(t) = v.segment(t * cols, cols).transpose();
  return block;
}

void CheckShapes(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                 const Eigen::Ref<const MatrixXd>& u_future) {
  if (xhat.size() != model.n_xhat || u_future.rows() != model.h_f ||
      u_future.cols() != model.n_u) {
    throw InvalidArgument("NMPC: x_hat / u_future shape does not match the model");
  }
}

Vector2d ContinuousIk(const ArmGeometry& geom, const Vector2d& tip, const Vector2d& near) {
  Vector2d q = InverseKinematics(geom, tip(0), tip(1));
  q(0) += 2 * std::numbers::pi * std::round((near(0) - q(0)) / (2 * std::numbers::pi));
  return q;
}

}  // namespace

void NmpcConfig::Validate() const {
  if (!(zeta >= 0.0)) throw InvalidArgument("NmpcConfig: zeta must be >= 0");
  if (!(lambda > 0.0)) throw InvalidArgument("NmpcConfig: lambda must be > 0");
  if (max_iterations < 1) throw InvalidArgument("NmpcConfig: max_iterations must be >= 1");
}

VectorXd Residual(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                  const Eigen::Ref<const MatrixXd>& u_future,
                  const Eigen::Ref<const VectorXd>& u_last,
                  const Eigen::Ref<const MatrixXd>& reference, double zeta) {
  CheckShapes(model, xhat, u_future);
  if (u_last.size() != model.n_u || reference.rows() != model.h_f ||
      reference.cols() != model.n_w) {
    throw InvalidArgument("Residual: u_last / reference shape does not match the model");
  }
  const Index n_w = model.n_w;
  const Index n_u = model.n_u;
  const MatrixXd predicted = PredictFuture(model, xhat, u_future);
  VectorXd r(Index{model.h_f} * (n_u + n_w));
  for (Index k = 0; k < model.h_f; ++k) {
    r.segment(k * n_w, n_w) = (predicted.row(k) - reference.row(k))
                                  .transpose()
                                  .cwiseQuotient(model.stats.w.std);
  }
  const Index offset = Index{model.h_f} * n_w;
  for (Index k = 0; k < model.h_f; ++k) {
    const VectorXd previous =
        k == 0 ? VectorXd(u_last) : VectorXd(u_future.row(k - 1).transpose());
    r.segment(offset + k * n_u, n_u) =
        zeta * (previous - u_future.row(k).transpose()).cwiseQuotient(model.stats.u.std);
  }
  return r;
}

MatrixXd ResidualJacobian(const PvsidModel& model, const Eigen::Ref<const VectorXd>& xhat,
                          const Eigen::Ref<const MatrixXd>& u_future, double zeta) {
  CheckShapes(model, xhat, u_future);
  const Index n_u = model.n_u;
  const Index n_dec = Index{model.h_f} * n_u;
  const Index n_track = Index{model.h_f} * model.n_w;
  const VectorXd x = PredictorInput(model, xhat, u_future);
  // Normalized outputs per normalized inputs; the w_std scaling cancels
  // against the residual's division by w_std.
  const MatrixXd jn = OutputInputJacobian<double>(model.predictor, x, model.n_xhat, n_dec);
  VectorXd inv_u_std(n_dec);
  for (Index k = 0; k < model.h_f; ++k) {
    inv_u_std.segment(k * n_u, n_u) = model.stats.u.std.cwiseInverse();
  }
  MatrixXd jac = MatrixXd::Zero(n_track + n_dec, n_dec);
  jac.topRows(n_track) = jn * inv_u_std.asDiagonal();
  for (Index i = 0; i < n_dec; ++i) {
    jac(n_track + i, i) = -zeta * inv_u_std(i);
    if (i >= n_u) jac(n_track + i, i - n_u) = zeta * inv_u_std(i);
  }
  return jac;
}

LmResult LmIterate(const ResidualFn& residual, const JacobianFn& jacobian, VectorXd u0,
                   double lambda, int iterations) {
  if (!(lambda > 0.0)) throw InvalidArgument("LmIterate: lambda must be > 0");
  if (iterations < 1) throw InvalidArgument("LmIterate: iterations must be >= 1");
  LmResult result;
  result.solution = std::move(u0);
  VectorXd r = residual(result.solution);
  for (int it = 0; it <= iterations; ++it) {
    if (!r.allFinite()) {
      throw NumericError("LmIterate: non-finite residual at iteration " + std::to_string(it));
    }
    result.cost_trace.push_back(0.5 * r.squaredNorm());
    if (it == iterations) break;
    const MatrixXd jac = jacobian(result.solution);
    MatrixXd normal = jac.transpose() * jac;
    normal.diagonal().array() += lambda;
    Eigen::LLT<MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw NumericError("LmIterate: Cholesky failed at iteration " + std::to_string(it));
    }
    result.solution -= llt.solve(jac.transpose() * r);
    r = residual(result.solution);
  }
  return result;
}

NmpcState InitNmpcState(const PvsidModel& model) {
  NmpcState state;
  state.u_past = MatrixXd::Zero(model.h_p, model.n_u);
  state.y_past = MatrixXd::Zero(model.h_p, model.n_y);
  state.plan = MatrixXd::Zero(model.h_f, model.n_u);
  return state;
}

void PushHistory(NmpcState& state, const Eigen::Ref<const VectorXd>& u,
                 const Eigen::Ref<const VectorXd>& y) {
  if (u.size() != state.u_past.cols() || y.size() != state.y_past.cols()) {
    throw InvalidArgument("PushHistory: row size does not match the buffers");
  }
  const Index h = state.u_past.rows();
  if (h > 1) {
    state.u_past.topRows(h - 1) = state.u_past.bottomRows(h - 1).eval();
    state.y_past.topRows(h - 1) = state.y_past.bottomRows(h - 1).eval();
  }
  state.u_past.row(h - 1) = u.transpose();
  state.y_past.row(h - 1) = y.transpose();
  ++state.rows_seen;
}

MpcStepResult MpcStep(const PvsidModel& model, const NmpcConfig& config, NmpcState& state,
                      const Eigen::Ref<const VectorXd>& y_prev,
                      const Eigen::Ref<const VectorXd>& u_prev,
                      const Eigen::Ref<const MatrixXd>& reference,
                      const MatrixXd& cold_start) {
  config.Validate();
  if (state.rows_seen + 1 < model.h_p) {
    throw NotWarmedUp("MpcStep: " + std::to_string(state.rows_seen + 1) + " of " +
                      std::to_string(model.h_p) + " history rows available");
  }
  if (reference.rows() != model.h_f || reference.cols() != model.n_w) {
    throw InvalidArgument("MpcStep: reference must be h_f x n_w");
  }
  PushHistory(state, u_prev, y_prev);
  const VectorXd xhat = EstimateState(model, state.u_past, state.y_past);

  MatrixXd initial(model.h_f, model.n_u);
  if (state.has_plan) {
    if (model.h_f > 1) initial.topRows(model.h_f - 1) = state.plan.bottomRows(model.h_f - 1);
    initial.row(model.h_f - 1) = state.plan.row(model.h_f - 1);
  } else if (cold_start.size() > 0) {
    if (cold_start.rows() != model.h_f || cold_start.cols() != model.n_u) {
      throw InvalidArgument("MpcStep: cold start must be h_f x n_u");
    }
    initial = cold_start;
  } else {
    initial = u_prev.transpose().replicate(model.h_f, 1);
  }

  const VectorXd u_last = state.u_past.row(model.h_p - 1).transpose();
  const MatrixXd ref = reference;
  auto residual = [&](const VectorXd& v) {
    return Residual(model, xhat, UnflattenRows(v, model.h_f, model.n_u), u_last, ref,
                    config.zeta);
  };
  auto jacobian = [&](const VectorXd& v) {
    return ResidualJacobian(model, xhat, UnflattenRows(v, model.h_f, model.n_u),
                            config.zeta);
  };
  LmResult lm =
      LmIterate(residual, jacobian, FlattenRows(initial), config.lambda, config.max_iterations);

  state.plan = UnflattenRows(lm.solution, model.h_f, model.n_u);
  state.has_plan = true;
  ++state.cycle;
  MpcStepResult out;
  out.u = state.plan.row(0).transpose();
  out.cost_trace = std::move(lm.cost_trace);
  return out;
}

const char* ControllerName(ControllerKind kind) {
  return kind == ControllerKind::kNmpc ? "nmpc" : "ik_ff";
}

double ControlLog::TipMse() const {
  if (size() == 0) return 0.0;
  return (measured - reference).rowwise().squaredNorm().mean();
}

double ControlLog::TipRms() const { return std::sqrt(TipMse()); }

ControlLog RunClosedLoop(const PlantParams& params, const PvsidModel* model,
                         const ClosedLoopOptions& options, const Trajectory& trajectory,
                         std::uint64_t seed) {
  params.Validate();
  const bool nmpc = options.controller == ControllerKind::kNmpc;
  if (nmpc) {
    if (!model) throw InvalidArgument("RunClosedLoop: NMPC needs a model");
    model->Validate();
    options.nmpc.Validate();
    if (model->n_u != 2 || model->n_w != 2 || model->n_y != kNumYChannels) {
      throw InvalidArgument("RunClosedLoop: model channels do not match the arm");
    }
  }
  if (trajectory.size() == 0 && options.warmup_steps == 0) {
    ControlLog empty;
    empty.period = params.period;
    return empty;
  }
  const ArmGeometry& geom = params.geometry;
  const Index n = trajectory.size();
  const int warmup = std::max(options.warmup_steps, nmpc ? model->h_p : 0);
  const Vector2d start =
      n > 0 ? Vector2d(trajectory.points.row(0).transpose()) : Vector2d(geom.max_reach(), 0.0);
  const Vector2d hold = InverseKinematics(geom, start(0), start(1));

  NoiseStream noise(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PlantState state = RestState(hold);
  PlantState previous = state;

  ControlLog log;
  log.period = params.period;
  log.warmup_steps = warmup;
  log.reference.resize(n, 2);
  log.measured.resize(n, 2);
  log.applied.resize(n, 2);

  NmpcState controller;
  if (nmpc) controller = InitNmpcState(*model);
  VectorXd pending_u, pending_y;

  auto advance = [&](const Vector2d& u) {
    const double disturbance = params.vibration_excitation * normal(noise);
    previous = state;
    state = PlantStep(params, state, u, disturbance);
  };

  for (int i = 0; i < warmup; ++i) {
    const VectorXd y = MeasureY(params, state, previous, noise);
    MeasureW(params, state, noise);
    if (nmpc) {
      if (i + 1 < warmup) {
        PushHistory(controller, hold, y);
      } else {
        pending_u = hold;
        pending_y = y;
      }
    }
    advance(hold);
  }

  auto reference_row = [&](Index i) -> Vector2d {
    return trajectory.points.row(std::min(i, n - 1)).transpose();
  };

  Vector2d u_prev = hold;
  for (Index i = 0; i < n; ++i) {
    const VectorXd y = MeasureY(params, state, previous, noise);
    const Vector2d w = MeasureW(params, state, noise);
    Vector2d u;
    if (nmpc) {
      MatrixXd reference(model->h_f, 2);
      MatrixXd cold(model->h_f, 2);
      Vector2d near = u_prev;
      for (Index k = 0; k < model->h_f; ++k) {
        reference.row(k) = reference_row(i + k).transpose();
        near = ContinuousIk(geom, reference_row(i + k), near);
        cold.row(k) = near.transpose();
      }
      MpcStepResult step =
          MpcStep(*model, options.nmpc, controller, pending_y, pending_u, reference, cold);
      u = step.u;
      log.costs.push_back(std::move(step.cost_trace));
      pending_u = u;
      pending_y = y;
    } else {
      u = ContinuousIk(geom, reference_row(i), u_prev);
    }
    log.reference.row(i) = reference_row(i).transpose();
    log.measured.row(i) = w.transpose();
    log.applied.row(i) = u.transpose();
    advance(u);
    u_prev = u;
  }
  return log;
}

void WriteControlLogCsv(std::ostream& os, const ControlLog& log, const std::string& comment) {
  WriteCommentLine(os, comment);
  size_t cost_columns = 0;
  for (const auto& c : log.costs) cost_columns = std::max(cost_columns, c.size());
  os << "t,rx,ry,wx,wy,u1,u2";
  for (size_t k = 0; k < cost_columns; ++k) os << ",cost" << k;
  os << '\n';
  std::vector<double> row;
  for (Index i = 0; i < log.size(); ++i) {
    row = {static_cast<double>(i) * log.period, log.reference(i, 0), log.reference(i, 1),
           log.measured(i, 0), log.measured(i, 1), log.applied(i, 0), log.applied(i, 1)};
    for (size_t k = 0; k < cost_columns; ++k) {
      const auto& c = log.costs[static_cast<size_t>(i)];
      row.push_back(k < c.size() ? c[k] : c.back());
    }
    WriteCsvRow(os, row);
  }
  os << "# tip_mse_mm2=" << FormatCsvNumber(log.TipMse() * 1e6)
     << " tip_rms_mm=" << FormatCsvNumber(log.TipRms() * 1e3) << '\n';
}

}  // namespace pvsid
