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


#include "pvsid/adamw.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pvsid/common.h"

namespace pvsid {
namespace {

TEST(AdamWTest, ZeroGradientIsPureDecay) {
  AdamWOptions opts;
  opts.learning_rate = 0.01;
  opts.weight_decay = 0.1;
  Eigen::VectorXd p(3);
  p << 1.0, -2.0, 0.5;
  const Eigen::VectorXd before = p;
  AdamWState<double> state(3, opts);
  EXPECT_EQ(state.step, 0);
  EXPECT_TRUE(state.first_moment.isZero(0.0));
  EXPECT_TRUE(state.second_moment.isZero(0.0));
  AdamWStep<double>(p, Eigen::VectorXd::Zero(3), state);
  EXPECT_EQ(state.step, 1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p(i), before(i) * (1 - 0.01 * 0.1), 1e-15);
}

TEST(AdamWTest, FirstStepMovesByLearningRate) {
  AdamWOptions opts;
  opts.weight_decay = 0.0;
  for (double g : {1e-3, 0.7, 250.0, -3.0}) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 2.0);
    AdamWState<double> state(4, opts);
    AdamWStep<double>(p, Eigen::VectorXd::Constant(4, g), state);
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expected = 2.0 - opts.learning_rate * g / (std::abs(g) + opts.epsilon);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(p(i), expected, 1e-15);
  }
}

TEST(AdamWTest, SecondStepHandComputed) {
  AdamWOptions opts;
  opts.learning_rate = 0.1;
  opts.weight_decay = 0.5;
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 1.0);
  AdamWState<double> state(1, opts);
  AdamWStep<double>(p, Eigen::VectorXd::Constant(1, 2.0), state);
  AdamWStep<double>(p, Eigen::VectorXd::Constant(1, -1.0), state);
  double q = 1.0, m = 0.0, v = 0.0;
  const double gs[] = {2.0, -1.0};
  for (int t = 1; t <= 2; ++t) {
    const double g = gs[t - 1];
    q *= 1 - 0.1 * 0.5;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    q -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
  }
  EXPECT_NEAR(p(0), q, 1e-14);
  EXPECT_EQ(state.step, 2);
}

TEST(AdamWTest, NonFiniteGradientLeavesStateUntouched) {
  Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  AdamWState<double> state(5, AdamWOptions{});
  AdamWStep<double>(p, Eigen::VectorXd::Constant(5, 0.3), state);
  const Eigen::VectorXd p_before = p;
  const Eigen::VectorXd m_before = state.first_moment;
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(5);
  bad(3) = std::nan("");
  EXPECT_THROW(AdamWStep<double>(p, bad, state), NumericError);
  bad(3) = INFINITY;
  EXPECT_THROW(AdamWStep<double>(p, bad, state), NumericError);
  EXPECT_EQ(p, p_before);
  EXPECT_EQ(state.first_moment, m_before);
  EXPECT_EQ(state.step, 1);
}

TEST(AdamWTest, ShapeMismatch) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  AdamWState<double> state(3, AdamWOptions{});
  EXPECT_THROW(AdamWStep<double>(p, Eigen::VectorXd::Zero(2), state), InvalidArgument);
}

TEST(AdamWTest, Deterministic) {
  auto run = [] {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(16);
    AdamWState<double> state(16, AdamWOptions{});
    for (int step = 0; step < 50; ++step) {
      Eigen::VectorXd g(16);
      for (auto& x : g) x = normal(rng);
      AdamWStep<double>(p, g, state, 0.5);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace pvsid
