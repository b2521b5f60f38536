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

#include "pvsid/kinematics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "pvsid/csv.h"

namespace pvsid {
namespace {

// Distance from the origin to the segment [a, b].
double SegmentDistanceToOrigin(const Vector2d& a, const Vector2d& b) {
  const Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return a.norm();
  const double s = std::clamp(-a.dot(d) / len2, 0.0, 1.0);
  return (a + s * d).norm();
}

struct Segment {
  Vector2d start;
  Vector2d end;
  double duration;
};

// Position along a polyline of timed segments at time t (clamped to the end).
class TimedPath {
 public:
  explicit TimedPath(std::vector<Segment> segments) : segments_(std::move(segments)) {}

  Vector2d At(double t) {
    while (cursor_ + 1 < segments_.size() && t >= segment_start_ + segments_[cursor_].duration) {
      segment_start_ += segments_[cursor_].duration;
      ++cursor_;
    }
    const Segment& seg = segments_[cursor_];
    const double s = std::clamp((t - segment_start_) / seg.duration, 0.0, 1.0);
    return seg.start + s * (seg.end - seg.start);
  }

 private:
  std::vector<Segment> segments_;
  size_t cursor_ = 0;
  double segment_start_ = 0.0;
};

}  // namespace

Trajectory WaypointTrajectory(const ArmGeometry& geom, const WaypointOptions& options,
                              std::uint64_t seed) {
  if (!(options.duration > 0.0) || !(options.period > 0.0)) {
    throw InvalidArgument("WaypointTrajectory: duration and period must be > 0");
  }
  if (!(options.speed_min > 0.0) || !(options.speed_max >= options.speed_min)) {
    throw InvalidArgument("WaypointTrajectory: speed range must be positive and ordered");
  }
  const double r_min = geom.min_reach() + options.margin;
  const double r_max = geom.max_reach() - options.margin;
  if (!(options.margin >= 0.0) || !(r_min < r_max) || !(options.min_y < r_max)) {
    throw InvalidArgument("WaypointTrajectory: margin leaves no sampling region");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-r_max, r_max);
  std::uniform_real_distribution<double> uy(std::max(options.min_y, -r_max), r_max);
  std::uniform_real_distribution<double> uspeed(options.speed_min, options.speed_max);

  constexpr int kMaxAttempts = 100000;
  auto sample_point = [&](const Vector2d* from) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Vector2d p(ux(rng), uy(rng));
      const double r = p.norm();
      if (r < r_min || r > r_max) continue;
      if (from) {
        if ((p - *from).norm() < 1e-3) continue;
        if (SegmentDistanceToOrigin(*from, p) < r_min) continue;
      }
      return p;
    }
    throw InvalidArgument("WaypointTrajectory: could not sample a feasible target");
  };

  std::vector<Segment> segments;
  Vector2d current = sample_point(nullptr);
  double total = 0.0;
  while (total < options.duration) {
    Vector2d next = sample_point(&current);
    const double speed = uspeed(rng);
    const double duration = (next - current).norm() / speed;
    segments.push_back({current, next, duration});
    total += duration;
    current = next;
  }

  const Index n = static_cast<Index>(std::llround(options.duration / options.period));
  Trajectory traj;
  traj.period = options.period;
  traj.points.resize(n, 2);
  TimedPath path(std::move(segments));
  for (Index i = 0; i < n; ++i) {
    traj.points.row(i) = path.At(static_cast<double>(i) * options.period).transpose();
  }
  return traj;
}

std::vector<Vector2d> StarVertices(const StarOptions& options) {
  if (options.points < 2) throw InvalidArgument("StarVertices: points must be >= 2");
  if (!(options.outer_radius > 0.0) || !(options.inner_ratio > 0.0)) {
    throw InvalidArgument("StarVertices: radii must be positive");
  }
  std::vector<Vector2d> vertices;
  const int count = 2 * options.points;
  for (int k = 0; k < count; ++k) {
    const double angle = std::numbers::pi / 2 + k * std::numbers::pi / options.points;
    const double radius =
        (k % 2 == 0) ? options.outer_radius : options.outer_radius * options.inner_ratio;
    vertices.push_back(options.center + radius * Vector2d(std::cos(angle), std::sin(angle)));
  }
  return vertices;
}

Trajectory StarTrajectory(const ArmGeometry& geom, const StarOptions& options) {
  if (!(options.speed > 0.0) || !(options.period > 0.0)) {
    throw InvalidArgument("StarTrajectory: speed and period must be > 0");
  }
  std::vector<Vector2d> vertices = StarVertices(options);
  const size_t n_vertices = vertices.size();
  std::vector<double> cumulative{0.0};
  for (size_t k = 0; k < n_vertices; ++k) {
    const Vector2d& a = vertices[k];
    const Vector2d& b = vertices[(k + 1) % n_vertices];
    const double r_near = SegmentDistanceToOrigin(a, b);
    const double r_far = std::max(a.norm(), b.norm());
    if (r_near < geom.min_reach() || r_far > geom.max_reach()) {
      throw OutOfWorkspace("StarTrajectory: star leaves the reachable annulus",
                           r_far > geom.max_reach() ? r_far : r_near);
    }
    cumulative.push_back(cumulative.back() + (b - a).norm());
  }
  const double length = cumulative.back();
  const Index steps =
      std::max<Index>(1, std::llround(length / (options.speed * options.period)));

  Trajectory traj;
  traj.period = options.period;
  traj.points.resize(steps + 1, 2);
  size_t seg = 0;
  for (Index i = 0; i <= steps; ++i) {
    const double s = (i == steps) ? length : length * static_cast<double>(i) / steps;
    while (seg + 1 < n_vertices && s > cumulative[seg + 1]) ++seg;
    const Vector2d& a = vertices[seg];
    const Vector2d& b = vertices[(seg + 1) % n_vertices];
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double frac = seg_len > 0 ? (s - cumulative[seg]) / seg_len : 0.0;
    traj.points.row(i) = (a + std::clamp(frac, 0.0, 1.0) * (b - a)).transpose();
  }
  return traj;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> TrajectoryToJoints(const ArmGeometry& geom,
                                                            const Trajectory& traj) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> joints(traj.size(), 2);
  for (Index i = 0; i < traj.size(); ++i) {
    Vector2d q = InverseKinematics(geom, traj.points(i, 0), traj.points(i, 1));
    if (i > 0) {
      // keep the shoulder angle continuous across the atan2 branch cut
      const double previous = joints(i - 1, 0);
      q(0) += 2 * std::numbers::pi * std::round((previous - q(0)) / (2 * std::numbers::pi));
    }
    joints.row(i) = q.transpose();
  }
  return joints;
}

void WriteTrajectoryCsv(std::ostream& os, const Trajectory& traj,
                        const std::string& header_comment) {
  WriteCommentLine(os, header_comment);
  os << "t,x,y\n";
  for (Index i = 0; i < traj.size(); ++i) {
    WriteCsvRow(os, {static_cast<double>(i) * traj.period, traj.points(i, 0),
                     traj.points(i, 1)});
  }
}

}  // namespace pvsid
