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

#ifndef PVSID_KINEMATICS_H_
#define PVSID_KINEMATICS_H_

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pvsid/common.h"

namespace pvsid {

// Link lengths of the planar 2-DoF arm, meters. Joint angles are (alpha,
// beta): alpha is the shoulder angle from the +X axis, beta the elbow angle
// relative to link 1.
struct ArmGeometry {
  double l1 = 0.1;
  double l2 = 0.1;

  double min_reach() const { return std::abs(l1 - l2); }
  double max_reach() const { return l1 + l2; }
};

// Tip position (X, Y).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> ForwardKinematics(const ArmGeometry& geom,
                                              Scalar alpha, Scalar beta) {
  using std::cos;
  using std::sin;
  const Scalar l1(geom.l1), l2(geom.l2);
  return {l1 * cos(alpha) + l2 * cos(alpha + beta),
          l1 * sin(alpha) + l2 * sin(alpha + beta)};
}

// Joint angles on the branch beta in [0, pi]. Throws OutOfWorkspace when the
// radius falls outside [|l1 - l2|, l1 + l2] by more than 1e-12.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> InverseKinematics(const ArmGeometry& geom, Scalar x,
                                              Scalar y) {
  using std::acos;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  constexpr double kSlack = 1e-12;
  const Scalar l1(geom.l1), l2(geom.l2);
  const Scalar r2 = x * x + y * y;
  const double r = std::sqrt(static_cast<double>(r2));
  if (!(r >= geom.min_reach() - kSlack && r <= geom.max_reach() + kSlack)) {
    throw OutOfWorkspace("InverseKinematics: radius " + std::to_string(r) +
                             " m outside reachable annulus [" +
                             std::to_string(geom.min_reach()) + ", " +
                             std::to_string(geom.max_reach()) + "]",
                         r);
  }
  Scalar c = (r2 - l1 * l1 - l2 * l2) / (Scalar(2) * l1 * l2);
  if (c > Scalar(1)) c = Scalar(1);
  if (c < Scalar(-1)) c = Scalar(-1);
  const Scalar beta = acos(c);
  const Scalar alpha = atan2(y, x) - atan2(l2 * sin(beta), l1 + l2 * cos(beta));
  return {alpha, beta};
}

// Sampled tip path. points.row(i) is the tip position at time i * period.
struct Trajectory {
  double period = 0.02;
  Eigen::Matrix<double, Eigen::Dynamic, 2> points;

  Index size() const { return points.rows(); }
};

struct WaypointOptions {
  double duration = 60.0;   // s
  double period = 0.02;     // s
  double speed_min = 0.03;  // m/s
  double speed_max = 0.3;   // m/s
  // Targets keep at least `margin` from both annulus boundaries.
  double margin = 0.02;
  // Targets (and so every segment) stay in the half plane Y >= min_y, which
  // keeps the shoulder angle continuous.
  double min_y = 0.02;
};

// Continuous piecewise-linear tip path through random targets, each segment
// at a random constant speed drawn from [speed_min, speed_max]. Samples
// round(duration / period) points. Every segment keeps the radius inside
// [min_reach + margin, max_reach - margin].
Trajectory WaypointTrajectory(const ArmGeometry& geom, const WaypointOptions& options,
                              std::uint64_t seed);

struct StarOptions {
  Vector2d center{0.0, 0.12};
  double outer_radius = 0.05;
  double inner_ratio = 0.382;
  int points = 5;
  double speed = 0.06;
  double period = 0.02;
};

// Vertices of the star polygon, alternating outer and inner, starting at the
// top outer vertex. The closed path returns to vertex 0.
std::vector<Vector2d> StarVertices(const StarOptions& options);

// Closed star path traversed at constant speed: round(L / (speed * period)) + 1
// samples, first and last both at the starting vertex.
Trajectory StarTrajectory(const ArmGeometry& geom, const StarOptions& options);

// Joint-space reference for each tip sample; rows are (alpha, beta).
Eigen::Matrix<double, Eigen::Dynamic, 2> TrajectoryToJoints(const ArmGeometry& geom,
                                                            const Trajectory& traj);

// CSV with header `t,x,y`.
void WriteTrajectoryCsv(std::ostream& os, const Trajectory& traj,
                        const std::string& header_comment = "");

}  // namespace pvsid

#endif  // PVSID_KINEMATICS_H_
