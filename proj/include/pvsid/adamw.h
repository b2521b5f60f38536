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

#ifndef PVSID_ADAMW_H_
#define PVSID_ADAMW_H_

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "pvsid/common.h"

namespace pvsid {

// Defaults follow the common published AdamW defaults.
struct AdamWOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
};

template <typename Scalar>
struct AdamWState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  AdamWState() = default;
  AdamWState(Index parameter_count, AdamWOptions opts)
      : first_moment(Vector::Zero(parameter_count)),
        second_moment(Vector::Zero(parameter_count)),
        options(opts) {}

  std::int64_t step = 0;
  Vector first_moment;
  Vector second_moment;
  AdamWOptions options;
};

// One bias-corrected Adam update with decoupled weight decay:
//   p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)
// `learning_rate_scale` multiplies lr (used by learning-rate schedules).
// A non-finite gradient raises NumericError before anything is modified.
template <typename Scalar>
void AdamWStep(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> parameters,
               const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& grad,
               AdamWState<Scalar>& state, Scalar learning_rate_scale = Scalar(1)) {
  if (grad.size() != parameters.size() ||
      state.first_moment.size() != parameters.size()) {
    throw InvalidArgument("AdamWStep: gradient/state size does not match parameters");
  }
  if (!grad.allFinite()) {
    throw NumericError("AdamWStep: non-finite gradient entry");
  }
  const AdamWOptions& o = state.options;
  const Scalar lr = static_cast<Scalar>(o.learning_rate) * learning_rate_scale;
  const Scalar beta1 = static_cast<Scalar>(o.beta1);
  const Scalar beta2 = static_cast<Scalar>(o.beta2);
  state.step += 1;
  const Scalar correction1 =
      Scalar(1) - std::pow(beta1, static_cast<Scalar>(state.step));
  const Scalar correction2 =
      Scalar(1) - std::pow(beta2, static_cast<Scalar>(state.step));

  parameters *= Scalar(1) - lr * static_cast<Scalar>(o.weight_decay);
  state.first_moment = beta1 * state.first_moment + (Scalar(1) - beta1) * grad;
  state.second_moment =
      beta2 * state.second_moment + (Scalar(1) - beta2) * grad.cwiseAbs2();
  const Scalar step_size = lr / correction1;
  parameters.array() -=
      step_size * state.first_moment.array() /
      ((state.second_moment.array() / correction2).sqrt() +
       static_cast<Scalar>(o.epsilon));
}

}  // namespace pvsid

#endif  // PVSID_ADAMW_H_
