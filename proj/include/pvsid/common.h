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

#ifndef PVSID_COMMON_H_
#define PVSID_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace pvsid {

using Index = Eigen::Index;
using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using Vector2d = Eigen::Vector2d;

// Bad shapes, out-of-range settings, malformed files. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, failed factorizations. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Target outside the reachable annulus of the arm.
class OutOfWorkspace : public InvalidArgument {
 public:
  OutOfWorkspace(const std::string& what, double radius)
      : InvalidArgument(what), radius_(radius) {}
  double radius() const { return radius_; }

 private:
  double radius_;
};

// Training produced a non-finite loss.
class TrainingFailure : public NumericError {
 public:
  TrainingFailure(const std::string& what, int last_finite_epoch)
      : NumericError(what), last_finite_epoch_(last_finite_epoch) {}
  // -1 when no epoch completed with a finite loss.
  int last_finite_epoch() const { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

// The controller was asked for an input before h_p history rows were seen.
class NotWarmedUp : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// 64-bit FNV-1a, used for config fingerprints and model checksums.
inline std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string ToHex(std::uint64_t value);

}  // namespace pvsid

#endif  // PVSID_COMMON_H_
