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

#ifndef PVSID_MLP_H_
#define PVSID_MLP_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pvsid/common.h"

namespace pvsid {

// Dense feedforward network: affine layers, ReLU on hidden layers, identity
// on the output. All parameters live in one flat vector, layer by layer, each
// layer storing its row-major (d_out x d_in) weight followed by its bias. The
// optimizer and the model file operate on that flat vector directly.
template <typename Scalar>
class Mlp {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMajorMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using WeightMap = Eigen::Map<RowMajorMatrix>;
  using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
  using BiasMap = Eigen::Map<Vector>;
  using ConstBiasMap = Eigen::Map<const Vector>;

  Mlp() = default;

  // Zero-initialized network.
  explicit Mlp(std::vector<int> layer_dims) : layer_dims_(std::move(layer_dims)) {
    if (layer_dims_.size() < 2) {
      throw InvalidArgument("Mlp: layer_dims needs at least 2 entries");
    }
    Index offset = 0;
    for (int d : layer_dims_) {
      if (d < 1) throw InvalidArgument("Mlp: layer dims must be >= 1");
    }
    for (int l = 0; l + 1 < static_cast<int>(layer_dims_.size()); ++l) {
      offsets_.push_back(offset);
      offset += Index{layer_dims_[l]} * layer_dims_[l + 1] + layer_dims_[l + 1];
    }
    parameters_ = Vector::Zero(offset);
  }

  const std::vector<int>& layer_dims() const { return layer_dims_; }
  int num_layers() const { return static_cast<int>(offsets_.size()); }
  int input_dim() const { return layer_dims_.front(); }
  int output_dim() const { return layer_dims_.back(); }
  Index parameter_count() const { return parameters_.size(); }

  Vector& parameters() { return parameters_; }
  const Vector& parameters() const { return parameters_; }

  WeightMap weight(int layer) {
    return WeightMap(parameters_.data() + offsets_[layer], layer_dims_[layer + 1],
                     layer_dims_[layer]);
  }
  ConstWeightMap weight(int layer) const {
    return ConstWeightMap(parameters_.data() + offsets_[layer],
                          layer_dims_[layer + 1], layer_dims_[layer]);
  }
  BiasMap bias(int layer) {
    return BiasMap(parameters_.data() + bias_offset(layer), layer_dims_[layer + 1]);
  }
  ConstBiasMap bias(int layer) const {
    return ConstBiasMap(parameters_.data() + bias_offset(layer),
                        layer_dims_[layer + 1]);
  }

  // Offsets into the flat parameter vector; gradients share this layout.
  Index weight_offset(int layer) const { return offsets_[layer]; }
  Index bias_offset(int layer) const {
    return offsets_[layer] + Index{layer_dims_[layer]} * layer_dims_[layer + 1];
  }

 private:
  std::vector<int> layer_dims_;
  std::vector<Index> offsets_;
  Vector parameters_;
};

using Mlpd = Mlp<double>;

// He-style initialization: weights ~ N(0, 2 / fan_in), biases zero.
template <typename Scalar>
Mlp<Scalar> InitMlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
  Mlp<Scalar> net(layer_dims);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < net.num_layers(); ++l) {
    std::normal_distribution<double> normal(
        0.0, std::sqrt(2.0 / static_cast<double>(layer_dims[l])));
    auto w = net.weight(l);
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(normal(rng));
    }
  }
  return net;
}

// Activations recorded by ForwardTraced: layer_inputs[l] is the input to
// layer l (the raw input for l = 0, post-ReLU activations otherwise).
template <typename Scalar>
struct MlpTrace {
  std::vector<typename Mlp<Scalar>::Matrix> layer_inputs;
};

namespace internal {

template <typename Scalar>
void CheckInputRows(const Mlp<Scalar>& net, Index rows, const char* where) {
  if (rows != net.input_dim()) {
    throw InvalidArgument(std::string(where) + ": input has " +
                          std::to_string(rows) + " rows, network expects " +
                          std::to_string(net.input_dim()));
  }
}

}  // namespace internal

// Batched forward pass; each column of `inputs` is one sample.
template <typename Scalar>
typename Mlp<Scalar>::Matrix ForwardTraced(
    const Mlp<Scalar>& net,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& inputs,
    MlpTrace<Scalar>* trace) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  internal::CheckInputRows(net, inputs.rows(), "ForwardTraced");
  if (trace) {
    trace->layer_inputs.clear();
    trace->layer_inputs.reserve(net.num_layers());
  }
  Matrix activation = inputs;
  for (int l = 0; l < net.num_layers(); ++l) {
    Matrix next(net.layer_dims()[l + 1], activation.cols());
    next.noalias() = net.weight(l) * activation;
    next.colwise() += net.bias(l);
    if (l + 1 < net.num_layers()) next = next.cwiseMax(Scalar(0));
    if (trace) {
      trace->layer_inputs.push_back(std::move(activation));
    }
    activation = std::move(next);
  }
  return activation;
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix ForwardBatch(
    const Mlp<Scalar>& net,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& inputs) {
  return ForwardTraced<Scalar>(net, inputs, nullptr);
}

template <typename Scalar>
typename Mlp<Scalar>::Vector Forward(
    const Mlp<Scalar>& net,
    const Eigen::Ref<const typename Mlp<Scalar>::Vector>& x) {
  internal::CheckInputRows(net, x.size(), "Forward");
  typename Mlp<Scalar>::Matrix out = ForwardBatch<Scalar>(net, x);
  return out.col(0);
}

// Reverse pass. Given dLoss/dOutput (same shape as the traced output), writes
// dLoss/dParameters into `param_grad` (resized) and returns dLoss/dInputs.
template <typename Scalar>
typename Mlp<Scalar>::Matrix Backward(
    const Mlp<Scalar>& net, const MlpTrace<Scalar>& trace,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& output_grad,
    typename Mlp<Scalar>::Vector* param_grad) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  using RowMajorMatrix = typename Mlp<Scalar>::RowMajorMatrix;
  using Vector = typename Mlp<Scalar>::Vector;
  if (static_cast<int>(trace.layer_inputs.size()) != net.num_layers() ||
      output_grad.rows() != net.output_dim() ||
      output_grad.cols() != trace.layer_inputs.front().cols()) {
    throw InvalidArgument("Backward: trace/gradient shape mismatch");
  }
  if (param_grad) param_grad->setZero(net.parameter_count());
  Matrix delta = output_grad;
  for (int l = net.num_layers() - 1; l >= 0; --l) {
    const Matrix& input = trace.layer_inputs[l];
    if (param_grad) {
      Eigen::Map<RowMajorMatrix> grad_w(param_grad->data() + net.weight_offset(l),
                                        net.layer_dims()[l + 1],
                                        net.layer_dims()[l]);
      grad_w.noalias() = delta * input.transpose();
      Eigen::Map<Vector>(param_grad->data() + net.bias_offset(l),
                         net.layer_dims()[l + 1]) = delta.rowwise().sum();
    }
    Matrix previous(net.layer_dims()[l], delta.cols());
    previous.noalias() = net.weight(l).transpose() * delta;
    if (l > 0) {
      // ReLU subgradient is 0 at 0: post-activation > 0 iff pre-activation > 0.
      previous = (input.array() > Scalar(0)).select(previous, Scalar(0));
    }
    delta = std::move(previous);
  }
  return delta;
}

template <typename Scalar>
struct LossGradient {
  Scalar loss = 0;
  typename Mlp<Scalar>::Vector gradient;
};

// Weighted squared error averaged over the batch:
//   loss = (1/B) sum_b sum_j weights_j (out_jb - target_jb)^2
// `output_weights` has one nonnegative entry per output coordinate (the
// identification loss puts gamma^(k-1) on the coordinates of step k).
template <typename Scalar>
LossGradient<Scalar> LossAndParamGradient(
    const Mlp<Scalar>& net,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& inputs,
    const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& targets,
    const Eigen::Ref<const typename Mlp<Scalar>::Vector>& output_weights) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  if (inputs.cols() == 0) throw InvalidArgument("LossAndParamGradient: empty batch");
  if (targets.rows() != net.output_dim() || targets.cols() != inputs.cols() ||
      output_weights.size() != net.output_dim()) {
    throw InvalidArgument("LossAndParamGradient: target/weight shape mismatch");
  }
  if ((output_weights.array() < Scalar(0)).any()) {
    throw InvalidArgument("LossAndParamGradient: negative weight");
  }
  MlpTrace<Scalar> trace;
  Matrix error = ForwardTraced<Scalar>(net, inputs, &trace) - targets;
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(inputs.cols());
  LossGradient<Scalar> result;
  result.loss =
      (output_weights.asDiagonal() * error.cwiseAbs2()).sum() * inv_batch;
  Matrix output_grad = (Scalar(2) * inv_batch) * (output_weights.asDiagonal() * error);
  Backward<Scalar>(net, trace, output_grad, &result.gradient);
  return result;
}

// d output / d x[first : first + count] at x. Columns outside the slice are
// treated as constants (the NMPC uses this with the state estimate fixed).
template <typename Scalar>
typename Mlp<Scalar>::Matrix OutputInputJacobian(
    const Mlp<Scalar>& net,
    const Eigen::Ref<const typename Mlp<Scalar>::Vector>& x, Index first,
    Index count) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  internal::CheckInputRows(net, x.size(), "OutputInputJacobian");
  if (first < 0 || count < 0 || first + count > x.size()) {
    throw InvalidArgument("OutputInputJacobian: slice [" + std::to_string(first) +
                          ", " + std::to_string(first + count) +
                          ") outside input of size " + std::to_string(x.size()));
  }
  MlpTrace<Scalar> trace;
  ForwardTraced<Scalar>(net, x, &trace);
  // Forward-mode: propagate the selected input directions through the layers.
  Matrix tangent = net.weight(0).middleCols(first, count);
  for (int l = 1; l < net.num_layers(); ++l) {
    const auto active = (trace.layer_inputs[l].col(0).array() > Scalar(0));
    for (Index i = 0; i < tangent.rows(); ++i) {
      if (!active(i)) tangent.row(i).setZero();
    }
    Matrix next(net.layer_dims()[l + 1], count);
    next.noalias() = net.weight(l) * tangent;
    tangent = std::move(next);
  }
  return tangent;
}

}  // namespace pvsid

#endif  // PVSID_MLP_H_
