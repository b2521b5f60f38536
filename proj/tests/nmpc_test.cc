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

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pvsid/common.h"
#include "test_util.h"

namespace pvsid {
namespace {

using testing::MaxRelativeError;
using testing::RandomMatrix;

ChannelStats Stats(const VectorXd& mean, const VectorXd& std) { return {mean, std}; }

ChannelStats Identity(int n) { return Stats(VectorXd::Zero(n), VectorXd::Ones(n)); }

// Model with single-layer (affine) networks and the given stats.
PvsidModel AffineModel(int h_p, int h_f, int n_u, int n_y, int n_w, int n_xhat) {
  PvsidModel m;
  m.h_p = h_p;
  m.h_f = h_f;
  m.n_u = n_u;
  m.n_y = n_y;
  m.n_w = n_w;
  m.n_xhat = n_xhat;
  m.gamma = 1.0;
  for (int c = 0; c < n_y; ++c) m.y_channels.push_back(c);
  m.stats = {Identity(n_u), Identity(n_y), Identity(n_w)};
  m.estimator = Mlpd({m.estimator_input_dim(), n_xhat});
  m.predictor = Mlpd({m.predictor_input_dim(), m.predictor_output_dim()});
  return m;
}

PvsidModel RandomDeepModel(std::mt19937_64& rng) {
  TrainConfig c;
  c.n_xhat = 3;
  c.seed = rng();
  c.estimator_hidden = {6};
  c.predictor_hidden = {10, 10};
  NormStats stats;
  stats.u = Stats(RandomMatrix(2, 1, rng), RandomMatrix(2, 1, rng).cwiseAbs().array() + 0.5);
  stats.y = Stats(RandomMatrix(3, 1, rng), VectorXd::Ones(3));
  stats.w = Stats(RandomMatrix(2, 1, rng), RandomMatrix(2, 1, rng).cwiseAbs().array() + 0.1);
  PvsidModel m = InitModel(c, 3, 4, 2, 3, 2, stats);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (auto& p : m.predictor.parameters()) p += normal(rng);  // nonzero biases
  return m;
}

TEST(ResidualTest, ZeroWhenTrackingAndStill) {
  PvsidModel m = AffineModel(2, 3, 2, 1, 2, 1);
  m.stats.w = Stats(Eigen::Vector2d(0.1, -0.2), Eigen::Vector2d(2.0, 3.0));
  m.predictor.bias(0).setConstant(0.5);  // normalized output 0.5 everywhere
  const MatrixXd u = Eigen::RowVector2d(0.3, 0.4).replicate(3, 1);
  const MatrixXd ref = Eigen::RowVector2d(0.1 + 1.0, -0.2 + 1.5).replicate(3, 1);
  const VectorXd r = Residual(m, VectorXd::Zero(1), u, Eigen::Vector2d(0.3, 0.4), ref, 0.7);
  EXPECT_EQ(r.size(), 3 * 4);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ResidualTest, ZetaZeroKillsRateBlock) {
  std::mt19937_64 rng(1);
  const PvsidModel m = RandomDeepModel(rng);
  const VectorXd r = Residual(m, RandomMatrix(3, 1, rng), RandomMatrix(4, 2, rng),
                              RandomMatrix(2, 1, rng), RandomMatrix(4, 2, rng), 0.0);
  EXPECT_TRUE(r.tail(8).isZero(0.0));
  EXPECT_FALSE(r.head(8).isZero(0.0));
}

TEST(ResidualTest, HandExpansion) {
  // h_f = 2, n_u = n_w = 1, n_x = 1; affine predictor on normalized inputs.
  PvsidModel m = AffineModel(1, 2, 1, 1, 1, 1);
  m.stats.u = Stats(VectorXd::Constant(1, 0.5), VectorXd::Constant(1, 2.0));
  m.stats.w = Stats(VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 4.0));
  m.predictor.weight(0) << 1.0, 2.0, 0.0,  //
      -1.0, 0.5, 3.0;
  m.predictor.bias(0) << 0.25, -0.5;
  const double xhat = 0.8, u1 = 1.5, u2 = -0.5, u_last = 0.1, r1 = 2.0, r2 = -3.0;
  const double zeta = 0.3;
  const double n1 = (u1 - 0.5) / 2.0, n2 = (u2 - 0.5) / 2.0;  // 0.5, -0.5
  const double p1 = (1.0 * xhat + 2.0 * n1 + 0.25) * 4.0 - 1.0;
  const double p2 = (-1.0 * xhat + 0.5 * n1 + 3.0 * n2 - 0.5) * 4.0 - 1.0;
  const Eigen::Vector4d expected((p1 - r1) / 4.0, (p2 - r2) / 4.0, zeta * (u_last - u1) / 2.0,
                                 zeta * (u1 - u2) / 2.0);
  const VectorXd r = Residual(m, VectorXd::Constant(1, xhat), Eigen::Vector2d(u1, u2),
                              VectorXd::Constant(1, u_last), Eigen::Vector2d(r1, r2), zeta);
  EXPECT_LT((r - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(Residual(m, VectorXd::Constant(1, xhat), Eigen::Vector3d::Zero(),
                        VectorXd::Constant(1, u_last), Eigen::Vector2d(r1, r2), zeta),
               InvalidArgument);
}

TEST(JacobianTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const PvsidModel m = RandomDeepModel(rng);
    const VectorXd xhat = RandomMatrix(3, 1, rng);
    const MatrixXd u = RandomMatrix(4, 2, rng);
    const VectorXd u_last = RandomMatrix(2, 1, rng);
    const MatrixXd ref = RandomMatrix(4, 2, rng);
    const double zeta = 0.5;
    const MatrixXd jac = ResidualJacobian(m, xhat, u, zeta);
    ASSERT_EQ(jac.rows(), 16);
    ASSERT_EQ(jac.cols(), 8);
    MatrixXd numeric(16, 8);
    for (Index j = 0; j < 8; ++j) {
      MatrixXd plus = u, minus = u;
      plus(j / 2, j % 2) += 1e-6;
      minus(j / 2, j % 2) -= 1e-6;
      numeric.col(j) = (Residual(m, xhat, plus, u_last, ref, zeta) -
                        Residual(m, xhat, minus, u_last, ref, zeta)) /
                       2e-6;
    }
    worst = std::max(worst, MaxRelativeError(jac, numeric));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(JacobianTest, RateBlockStructure) {
  std::mt19937_64 rng(3);
  const PvsidModel m = RandomDeepModel(rng);
  const double zeta = 0.7;
  const MatrixXd jac = ResidualJacobian(m, RandomMatrix(3, 1, rng), RandomMatrix(4, 2, rng), zeta);
  const MatrixXd rate = jac.bottomRows(8);
  for (Index i = 0; i < 8; ++i) {
    const double s = zeta / m.stats.u.std(i % 2);
    EXPECT_DOUBLE_EQ(rate(i, i), -s);
    if (i >= 2) {
      EXPECT_DOUBLE_EQ(rate(i, i - 2), s);
      EXPECT_NEAR(rate.row(i).sum(), 0.0, 1e-15);
    } else {
      EXPECT_DOUBLE_EQ(rate.row(i).sum(), -s);
    }
    EXPECT_EQ((rate.row(i).array() != 0.0).count(), i >= 2 ? 2 : 1);
  }
}

TEST(JacobianTest, AffinePredictorHasConstantTopBlock) {
  std::mt19937_64 rng(4);
  PvsidModel m = AffineModel(2, 3, 2, 1, 2, 2);
  m.predictor.parameters() = RandomMatrix(m.predictor.parameter_count(), 1, rng);
  const MatrixXd a = ResidualJacobian(m, RandomMatrix(2, 1, rng), RandomMatrix(3, 2, rng), 0.5);
  const MatrixXd b = ResidualJacobian(m, RandomMatrix(2, 1, rng), RandomMatrix(3, 2, rng), 0.5);
  EXPECT_EQ(a, b);
}

TEST(LmTest, LinearGaussNewtonStep) {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 8 + rng() % 20, n = 2 + rng() % 6;
    const MatrixXd a = RandomMatrix(m, n, rng);
    const VectorXd b = RandomMatrix(m, 1, rng);
    const LmResult r = LmIterate([&](const VectorXd& u) -> VectorXd { return a * u - b; },
                                 [&](const VectorXd&) -> MatrixXd { return a; },
                                 RandomMatrix(n, 1, rng), 1e-12, 1);
    const VectorXd exact = a.colPivHouseholderQr().solve(b);
    worst = std::max(worst, (r.solution - exact).norm() / exact.norm());
    EXPECT_EQ(r.cost_trace.size(), 2u);
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(LmTest, DampedStepMatchesAugmentedLeastSquares) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = RandomMatrix(10, 4, rng);
    const VectorXd b = RandomMatrix(10, 1, rng);
    const VectorXd u0 = RandomMatrix(4, 1, rng);
    const LmResult r = LmIterate([&](const VectorXd& u) -> VectorXd { return a * u - b; },
                                 [&](const VectorXd&) -> MatrixXd { return a; }, u0, 1.0, 1);
    // min |A d - l|^2 + |d|^2 as an ordinary least-squares problem.
    MatrixXd aug(14, 4);
    aug << a, MatrixXd::Identity(4, 4);
    VectorXd rhs(14);
    rhs << a * u0 - b, VectorXd::Zero(4);
    const VectorXd step = aug.householderQr().solve(rhs);
    EXPECT_LT((r.solution - (u0 - step)).norm(), 1e-12 * u0.norm());
    EXPECT_LE(r.cost_trace[1], r.cost_trace[0]);
  }
}

TEST(LmTest, StationaryAndErrors) {
  const MatrixXd a = MatrixXd::Identity(3, 3);
  const VectorXd u0 = Eigen::Vector3d(1, 2, 3);
  const LmResult r = LmIterate([&](const VectorXd& u) -> VectorXd { return a * u - u0; },
                               [&](const VectorXd&) -> MatrixXd { return a; }, u0, 1e-7, 4);
  EXPECT_EQ(r.solution, u0);
  EXPECT_EQ(r.cost_trace, std::vector<double>(5, 0.0));
  auto jac = [&](const VectorXd&) -> MatrixXd { return a; };
  EXPECT_THROW(LmIterate([](const VectorXd& u) -> VectorXd { return u * NAN; }, jac, u0, 1e-7, 1),
               NumericError);
  EXPECT_THROW(LmIterate([](const VectorXd& u) -> VectorXd { return u; }, jac, u0, 0.0, 1),
               InvalidArgument);
  EXPECT_THROW(LmIterate([](const VectorXd& u) -> VectorXd { return u; }, jac, u0, 1e-7, 0),
               InvalidArgument);
  auto bad_jac = [&](const VectorXd&) -> MatrixXd { return MatrixXd::Constant(3, 3, NAN); };
  EXPECT_THROW(LmIterate([](const VectorXd& u) -> VectorXd { return u; }, bad_jac, u0, 1e-7, 1),
               NumericError);
}

// Scalar plant x+ = a x + u with y = w = x, an exact hand-built model:
// x_hat = a y_last + u_last, w_k = a^k x_hat + sum_{j<k} a^(k-1-j) u_j.
PvsidModel ScalarPlantModel(int h_p, int h_f, double a) {
  PvsidModel m = AffineModel(h_p, h_f, 1, 1, 1, 1);
  m.estimator.weight(0)(0, 2 * (h_p - 1)) = 1.0;
  m.estimator.weight(0)(0, 2 * (h_p - 1) + 1) = a;
  auto w = m.predictor.weight(0);
  for (int k = 0; k < h_f; ++k) {
    w(k, 0) = std::pow(a, k);
    for (int j = 0; j < k; ++j) w(k, 1 + j) = std::pow(a, k - 1 - j);
  }
  return m;
}

TEST(MpcStepTest, WarmUpRequired) {
  const PvsidModel m = ScalarPlantModel(3, 4, 0.9);
  NmpcState s = InitNmpcState(m);
  const VectorXd one = VectorXd::Ones(1);
  PushHistory(s, one, one);
  EXPECT_FALSE(s.warmed_up());
  EXPECT_THROW(MpcStep(m, NmpcConfig{}, s, one, one, MatrixXd::Zero(4, 1)), NotWarmedUp);
  PushHistory(s, one, one);
  EXPECT_NO_THROW(MpcStep(m, NmpcConfig{}, s, one, one, MatrixXd::Zero(4, 1)));
  EXPECT_TRUE(s.warmed_up());
  EXPECT_EQ(s.cycle, 1);
}

TEST(MpcStepTest, ConsistentReferenceKeepsInput) {
  std::mt19937_64 rng(7);
  const PvsidModel m = RandomDeepModel(rng);
  NmpcState s = InitNmpcState(m);
  for (int i = 0; i < 2; ++i) PushHistory(s, RandomMatrix(2, 1, rng), RandomMatrix(3, 1, rng));
  const VectorXd u_prev = RandomMatrix(2, 1, rng);
  const VectorXd y_prev = RandomMatrix(3, 1, rng);
  NmpcState probe = s;
  PushHistory(probe, u_prev, y_prev);
  const VectorXd xhat = EstimateState(m, probe.u_past, probe.y_past);
  const MatrixXd hold = u_prev.transpose().replicate(4, 1);
  const MatrixXd reference = PredictFuture(m, xhat, hold);
  const MpcStepResult r = MpcStep(m, NmpcConfig{}, s, y_prev, u_prev, reference, hold);
  EXPECT_LT((r.u - u_prev).norm(), 1e-12);
  EXPECT_LT(r.cost_trace.front(), 1e-25);
}

TEST(MpcStepTest, PureGivenState) {
  std::mt19937_64 rng(8);
  const PvsidModel m = RandomDeepModel(rng);
  NmpcState s = InitNmpcState(m);
  for (int i = 0; i < 3; ++i) PushHistory(s, RandomMatrix(2, 1, rng), RandomMatrix(3, 1, rng));
  const VectorXd u = RandomMatrix(2, 1, rng), y = RandomMatrix(3, 1, rng);
  const MatrixXd ref = RandomMatrix(4, 2, rng);
  NmpcState a = s, b = s;
  const MpcStepResult ra = MpcStep(m, NmpcConfig{}, a, y, u, ref);
  const MpcStepResult rb = MpcStep(m, NmpcConfig{}, b, y, u, ref);
  EXPECT_EQ(ra.u, rb.u);
  EXPECT_EQ(ra.cost_trace, rb.cost_trace);
  EXPECT_EQ(a.plan, b.plan);
}

TEST(MpcStepTest, WarmStartShiftsPlan) {
  std::mt19937_64 rng(9);
  const PvsidModel m = RandomDeepModel(rng);
  NmpcState s = InitNmpcState(m);
  for (int i = 0; i < 3; ++i) PushHistory(s, RandomMatrix(2, 1, rng), RandomMatrix(3, 1, rng));
  NmpcConfig frozen;
  frozen.lambda = 1e12;  // steps of ~|J^T l| / lambda: the plan stays put
  const MatrixXd cold = RandomMatrix(4, 2, rng);
  MpcStep(m, frozen, s, RandomMatrix(3, 1, rng), RandomMatrix(2, 1, rng), RandomMatrix(4, 2, rng),
          cold);
  const MatrixXd first = s.plan;
  EXPECT_LT((first - cold).cwiseAbs().maxCoeff(), 1e-9);
  MpcStep(m, frozen, s, RandomMatrix(3, 1, rng), first.row(0).transpose(),
          RandomMatrix(4, 2, rng));
  EXPECT_LT((s.plan.topRows(3) - first.bottomRows(3)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((s.plan.row(3) - first.row(3)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MpcStepTest, MatchesClosedFormQuadraticProgram) {
  constexpr int kHp = 3, kHf = 8;
  constexpr double kA = 0.9, kZeta = 0.5;
  const PvsidModel m = ScalarPlantModel(kHp, kHf, kA);
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    NmpcState s = InitNmpcState(m);
    for (int i = 0; i < kHp - 1; ++i) PushHistory(s, RandomMatrix(1, 1, rng), RandomMatrix(1, 1, rng));
    const VectorXd u_prev = RandomMatrix(1, 1, rng), y_prev = RandomMatrix(1, 1, rng);
    const VectorXd ref = RandomMatrix(kHf, 1, rng);
    const MpcStepResult r = MpcStep(m, NmpcConfig{kZeta, 1e-7, 5}, s, y_prev, u_prev, ref);

    // Stack w = g x + G u, rate = zeta (D u + c), and solve the normal equations.
    const double x = kA * y_prev(0) + u_prev(0);
    VectorXd g(kHf);
    MatrixXd big_g = MatrixXd::Zero(kHf, kHf);
    for (int k = 0; k < kHf; ++k) {
      g(k) = std::pow(kA, k);
      for (int j = 0; j < k; ++j) big_g(k, j) = std::pow(kA, k - 1 - j);
    }
    MatrixXd d = -MatrixXd::Identity(kHf, kHf);
    for (int k = 1; k < kHf; ++k) d(k, k - 1) = 1.0;
    VectorXd c = VectorXd::Zero(kHf);
    c(0) = u_prev(0);
    const MatrixXd lhs = big_g.transpose() * big_g + kZeta * kZeta * d.transpose() * d;
    const VectorXd rhs = big_g.transpose() * (ref - g * x) - kZeta * kZeta * d.transpose() * c;
    const VectorXd u_star = lhs.ldlt().solve(rhs);
    EXPECT_LT((s.plan.col(0) - u_star).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_NEAR(r.u(0), u_star(0), 1e-3);
  }
}

TEST(ClosedLoopTest, EmptyTrajectoryIsWarmUpOnly) {
  PlantParams p;
  ClosedLoopOptions opts;
  opts.controller = ControllerKind::kIkFeedforward;
  opts.warmup_steps = 5;
  Trajectory empty;
  const ControlLog log = RunClosedLoop(p, nullptr, opts, empty, 1);
  EXPECT_EQ(log.size(), 0);
  EXPECT_EQ(log.warmup_steps, 5);
  EXPECT_EQ(log.TipMse(), 0.0);
  opts.controller = ControllerKind::kNmpc;
  EXPECT_THROW(RunClosedLoop(p, nullptr, opts, empty, 1), InvalidArgument);
}

TEST(ClosedLoopTest, StaticReferenceAtNoiseFloor) {
  PlantParams p;
  p.vibration_excitation = 0.0;
  Trajectory still;
  still.points = Eigen::RowVector2d(0.05, 0.12).replicate(500, 1);
  ClosedLoopOptions opts;
  opts.controller = ControllerKind::kIkFeedforward;
  const ControlLog log = RunClosedLoop(p, nullptr, opts, still, 3);
  const double floor = std::sqrt(2.0) * p.noise_tip;
  EXPECT_LT(log.TipRms(), 1.1 * floor);
  EXPECT_GT(log.TipRms(), 0.9 * floor);
}

}  // namespace
}  // namespace pvsid
