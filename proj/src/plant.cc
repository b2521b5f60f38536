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

#include "pvsid/plant.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

namespace pvsid {
namespace {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Packed continuous state: [q1, q2, qd1, qd2, eta, eta_dot].
Vector6d Pack(const PlantState& s) {
  Vector6d x;
  x << s.q, s.qdot, s.vibration, s.vibration_velocity;
  return x;
}

Vector2d JointAcceleration(const PlantParams& p, const Vector2d& q, const Vector2d& qdot,
                           const Vector2d& u) {
  const double lc2 = 0.5 * p.geometry.l2;
  const double h = p.mass2 * p.geometry.l1 * lc2 * std::sin(q(1));
  const Vector2d coriolis(-h * (2.0 * qdot(0) * qdot(1) + qdot(1) * qdot(1)),
                          h * qdot(0) * qdot(0));
  const Vector2d friction(p.friction1 * qdot(0), p.friction2 * qdot(1));
  const Vector2d rhs = JointTorque(p, q, qdot, u) - coriolis - friction;
  return MassMatrix(p, q(1)).inverse() * rhs;
}

Vector6d Derivative(const PlantParams& p, const Vector6d& x, const Vector2d& u,
                    double disturbance) {
  const Vector2d q = x.head<2>();
  const Vector2d qdot = x.segment<2>(2);
  const Vector2d qddot = JointAcceleration(p, q, qdot, u);
  const double omega = 2.0 * std::numbers::pi * p.vibration_frequency;
  const double eta_ddot = -2.0 * p.vibration_damping * omega * x(5) -
                          omega * omega * x(4) -
                          p.vibration_coupling * (qddot(0) + qddot(1)) + disturbance;
  Vector6d dx;
  dx << qdot, qddot, x(5), eta_ddot;
  return dx;
}

}  // namespace

void PlantParams::Validate() const {
  const double positive[] = {geometry.l1, geometry.l2, mass1,  mass2, inertia1,
                             inertia2,    friction1,   friction2, kp, kd,
                             vibration_frequency, period};
  for (double v : positive) {
    if (!(v > 0.0)) throw InvalidArgument("PlantParams: physical parameters must be > 0");
  }
  if (!(vibration_damping > 0.0 && vibration_damping <= 1.0)) {
    throw InvalidArgument("PlantParams: vibration_damping must be in (0, 1]");
  }
  if (substeps < 1) throw InvalidArgument("PlantParams: substeps must be >= 1");
  const double nonnegative[] = {torque_limit, vibration_coupling, vibration_excitation,
                                imu_mount,    noise_angle,        noise_gyro,
                                noise_accel,  noise_joint_velocity, noise_tip};
  for (double v : nonnegative) {
    if (!(v >= 0.0)) throw InvalidArgument("PlantParams: gains and noise must be >= 0");
  }
}

PlantState RestState(const Vector2d& q) {
  PlantState s;
  s.q = q;
  s.u_last = q;
  return s;
}

Eigen::Matrix2d MassMatrix(const PlantParams& p, double beta) {
  const double l1 = p.geometry.l1;
  const double lc1 = 0.5 * l1;
  const double lc2 = 0.5 * p.geometry.l2;
  const double c = std::cos(beta);
  const double m22 = p.inertia2 + p.mass2 * lc2 * lc2;
  const double m12 = m22 + p.mass2 * l1 * lc2 * c;
  const double m11 = p.inertia1 + p.mass1 * lc1 * lc1 + m22 +
                     p.mass2 * (l1 * l1 + 2.0 * l1 * lc2 * c);
  Eigen::Matrix2d m;
  m << m11, m12, m12, m22;
  return m;
}

Vector2d JointTorque(const PlantParams& p, const Vector2d& q, const Vector2d& qdot,
                     const Vector2d& u) {
  Vector2d tau = p.kp * (u - q) - p.kd * qdot;
  return tau.cwiseMax(-p.torque_limit).cwiseMin(p.torque_limit);
}

double KineticEnergy(const PlantParams& params, const PlantState& state) {
  return 0.5 * state.qdot.dot(MassMatrix(params, state.q(1)) * state.qdot);
}

PlantState PlantStep(const PlantParams& params, const PlantState& state,
                     const Vector2d& u, double vibration_disturbance) {
  if (!u.allFinite() || !std::isfinite(vibration_disturbance)) {
    throw InvalidArgument("PlantStep: non-finite input");
  }
  const double h = params.period / params.substeps;
  Vector6d x = Pack(state);
  for (int i = 0; i < params.substeps; ++i) {
    const Vector6d k1 = Derivative(params, x, u, vibration_disturbance);
    const Vector6d k2 = Derivative(params, x + 0.5 * h * k1, u, vibration_disturbance);
    const Vector6d k3 = Derivative(params, x + 0.5 * h * k2, u, vibration_disturbance);
    const Vector6d k4 = Derivative(params, x + h * k3, u, vibration_disturbance);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  PlantState next;
  next.q = x.head<2>();
  next.qdot = x.segment<2>(2);
  next.vibration = x(4);
  next.vibration_velocity = x(5);
  next.u_last = u;
  return next;
}

Eigen::Vector3d ImuReading(const PlantParams& params, const PlantState& state,
                           const PlantState& previous) {
  const double l1 = params.geometry.l1;
  const double l2 = params.geometry.l2;
  const double r = params.imu_mount;
  const double a1 = state.q(0);
  const double a12 = state.q(0) + state.q(1);
  const Vector2d qddot = (state.qdot - previous.qdot) / params.period;
  const double w1 = state.qdot(0);
  const double w12 = state.qdot(0) + state.qdot(1);
  const double dw1 = qddot(0);
  const double dw12 = qddot(0) + qddot(1);

  const Vector2d e1(std::cos(a1), std::sin(a1));
  const Vector2d n1(-std::sin(a1), std::cos(a1));
  const Vector2d e2(std::cos(a12), std::sin(a12));
  const Vector2d n2(-std::sin(a12), std::cos(a12));
  // Rigid-body acceleration of the mount point, world frame.
  Vector2d accel = l1 * (dw1 * n1 - w1 * w1 * e1) + r * (dw12 * n2 - w12 * w12 * e2);
  // Bending: lateral motion grows linearly along link 2.
  const double scale = r / l2;
  const double eta_ddot =
      (state.vibration_velocity - previous.vibration_velocity) / params.period;
  accel += scale * eta_ddot * n2;

  Eigen::Vector3d out;
  out(0) = w12 + state.vibration_velocity / l2;
  out(1) = accel.dot(e2);
  out(2) = accel.dot(n2);
  return out;
}

VectorXd MeasureY(const PlantParams& params, const PlantState& state,
                  const PlantState& previous, NoiseStream& noise) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Vector3d imu = ImuReading(params, state, previous);
  VectorXd y(kNumYChannels);
  y << state.q(0), state.q(1), imu(0), imu(1), imu(2), state.qdot(0), state.qdot(1);
  const double stds[kNumYChannels] = {params.noise_angle, params.noise_angle,
                                      params.noise_gyro,  params.noise_accel,
                                      params.noise_accel, params.noise_joint_velocity,
                                      params.noise_joint_velocity};
  for (int i = 0; i < kNumYChannels; ++i) y(i) += stds[i] * normal(noise);
  return y;
}

Vector2d MeasureW(const PlantParams& params, const PlantState& state, NoiseStream& noise) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a12 = state.q(0) + state.q(1);
  Vector2d w = ForwardKinematics(params.geometry, state.q(0), state.q(1));
  if (state.vibration != 0.0) {
    w += state.vibration * Vector2d(-std::sin(a12), std::cos(a12));
  }
  const double nx = normal(noise);
  const double ny = normal(noise);
  w(0) += params.noise_tip * nx;
  w(1) += params.noise_tip * ny;
  return w;
}

IoLog SimulateLog(const PlantParams& params, const Eigen::Ref<const MatrixXd>& u,
                  const PlantState& initial, std::uint64_t seed) {
  params.Validate();
  if (u.rows() == 0) throw InvalidArgument("SimulateLog: empty input sequence");
  if (u.cols() != 2) throw InvalidArgument("SimulateLog: input must have 2 columns");
  NoiseStream noise(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  IoLog log;
  log.period = params.period;
  log.u = u;
  log.y.resize(u.rows(), kNumYChannels);
  log.w.resize(u.rows(), 2);
  PlantState state = initial;
  PlantState previous = initial;
  for (Index t = 0; t < u.rows(); ++t) {
    log.y.row(t) = MeasureY(params, state, previous, noise).transpose();
    log.w.row(t) = MeasureW(params, state, noise).transpose();
    const double disturbance = params.vibration_excitation * normal(noise);
    previous = state;
    state = PlantStep(params, state, u.row(t).transpose(), disturbance);
  }
  return log;
}

}  // namespace pvsid
