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

#ifndef PVSID_PLANT_H_
#define PVSID_PLANT_H_

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Core>

#include "pvsid/common.h"
#include "pvsid/io_log.h"
#include "pvsid/kinematics.h"

namespace pvsid {

// Surrogate for the physical arm: two rigid links in a horizontal plane, each
// joint driven by a saturated PD position loop, plus one lightly damped
// bending mode that deflects the tip and shakes the IMU. Units are SI.
struct PlantParams {
  ArmGeometry geometry;
  double mass1 = 0.06;
  double mass2 = 0.04;
  // Link inertias about their centers of mass (uniform rods by default).
  double inertia1 = 0.06 * 0.1 * 0.1 / 12.0;
  double inertia2 = 0.04 * 0.1 * 0.1 / 12.0;
  double friction1 = 1e-3;  // N m s / rad
  double friction2 = 1e-3;
  double kp = 0.4;  // N m / rad
  double kd = 0.05;  // N m s / rad
  double torque_limit = 0.3;  // N m

  double vibration_frequency = 12.0;  // Hz
  double vibration_damping = 0.05;
  // Tip deflection forcing per unit link-2 angular acceleration, m / rad.
  double vibration_coupling = 0.2;
  // Std of the random bending-mode forcing, m / s^2, held for one period.
  double vibration_excitation = 1.5;

  // IMU position along link 2, measured from the elbow, m.
  double imu_mount = 0.05;

  double noise_angle = 1e-4;  // rad
  double noise_gyro = 5e-3;  // rad / s
  double noise_accel = 5e-2;  // m / s^2
  double noise_joint_velocity = 5e-3;  // rad / s
  double noise_tip = 2e-4;  // m

  double period = 0.02;  // s
  int substeps = 10;

  void Validate() const;
};

struct PlantState {
  Vector2d q = Vector2d::Zero();
  Vector2d qdot = Vector2d::Zero();
  double vibration = 0.0;           // tip deflection, m
  double vibration_velocity = 0.0;  // m / s
  Vector2d u_last = Vector2d::Zero();
};

// Arm at rest at q with the reference equal to q.
PlantState RestState(const Vector2d& q);

// y channel layout.
inline constexpr int kNumYChannels = 7;
inline constexpr std::array<const char*, kNumYChannels> kYChannelNames = {
    "alpha", "beta", "gyro_z", "accel_x", "accel_y", "qdot1", "qdot2"};
inline constexpr std::array<int, 3> kImuChannels = {2, 3, 4};

using NoiseStream = std::mt19937_64;

// Joint-space inertia matrix at elbow angle beta.
Eigen::Matrix2d MassMatrix(const PlantParams& params, double beta);

// Actuator torque of the inner position loops.
Vector2d JointTorque(const PlantParams& params, const Vector2d& q, const Vector2d& qdot,
                     const Vector2d& u);

// Kinetic energy of the two links (the bending mode excluded).
double KineticEnergy(const PlantParams& params, const PlantState& state);

// Advances one control period with u held constant, using `substeps` RK4
// steps. `vibration_disturbance` is an extra bending-mode acceleration held
// over the period (the random excitation of SimulateLog).
PlantState PlantStep(const PlantParams& params, const PlantState& state,
                     const Vector2d& u, double vibration_disturbance = 0.0);

// Noise-free IMU reading at the link-2 mount: [gyro_z, accel_x, accel_y],
// acceleration in the link-2 frame. Accelerations use the velocity change
// from `previous` over one period.
Eigen::Vector3d ImuReading(const PlantParams& params, const PlantState& state,
                           const PlantState& previous);

// y = [alpha, beta, gyro_z, accel_x, accel_y, qdot1, qdot2] plus Gaussian
// noise. Always draws 7 normals from `noise`.
VectorXd MeasureY(const PlantParams& params, const PlantState& state,
                  const PlantState& previous, NoiseStream& noise);

// Tip position with bending deflection, plus Gaussian noise (2 draws).
Vector2d MeasureW(const PlantParams& params, const PlantState& state, NoiseStream& noise);

// Rolls the plant over `u` (N x 2). Row t records (u_t, y_t, w_t) where the
// measurements are taken before u_t is applied.
IoLog SimulateLog(const PlantParams& params, const Eigen::Ref<const MatrixXd>& u,
                  const PlantState& initial, std::uint64_t seed);

}  // namespace pvsid

#endif  // PVSID_PLANT_H_
