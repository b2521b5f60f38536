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

#ifndef PVSID_CONFIG_H_
#define PVSID_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvsid/common.h"
#include "pvsid/kinematics.h"
#include "pvsid/nmpc.h"
#include "pvsid/plant.h"
#include "pvsid/pvsid.h"

namespace pvsid {

enum class Profile { kDesk, kPaper };

const char* ProfileName(Profile profile);
// Throws InvalidArgument for anything but "desk" / "paper".
Profile ParseProfile(const std::string& name);

struct ExperimentConfig {
  Profile profile = Profile::kDesk;
  std::uint64_t seed = 1;

  PlantParams plant;

  // Identification data: one continuous random-waypoint run.
  WaypointOptions data;
  double train_fraction = 0.6;
  double val_fraction = 0.2;

  int h_p = 10;
  int h_f = 20;
  bool imu = true;
  // n_xhat, gamma, network sizes, optimizer; train.seed is overwritten by
  // `seed` when training from the harness.
  TrainConfig train;

  NmpcConfig nmpc;
  StarOptions star;

  std::vector<int> ablation_n_xhat;
  std::vector<bool> ablation_imu;
  std::vector<double> ablation_gamma;
  std::vector<std::uint64_t> ablation_seeds;

  // Optional inputs; when set they must exist at load time.
  std::string log_file;
  std::string model_file;
};

ExperimentConfig DefaultConfig(Profile profile);

// Raised for every config problem; the message names the line and key.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Strict `key = value` parser with `[section]` headers and `#` comments.
// Defaults come from `profile` when given, otherwise from the file's
// required `[experiment] profile` key. Unknown keys, malformed values, and
// out-of-range values are errors.
ExperimentConfig ParseConfigText(const std::string& text,
                                 std::optional<Profile> profile = std::nullopt,
                                 const std::string& source = "<config>");
ExperimentConfig ParseConfigFile(const std::string& path,
                                 std::optional<Profile> profile = std::nullopt);

// Every key, one per line, reparseable by ParseConfigText.
std::string SerializeConfig(const ExperimentConfig& config);

// Hex FNV-1a of SerializeConfig.
std::string ConfigFingerprint(const ExperimentConfig& config);

// Cross-field checks (e.g. fractions summing below 1). Throws ConfigError.
void ValidateConfig(const ExperimentConfig& config);

// TrainConfig for one model: the config's training settings with the y
// channel selection implied by `imu`.
TrainConfig MakeTrainConfig(const ExperimentConfig& config, int n_xhat, bool imu,
                            double gamma, std::uint64_t seed);

std::vector<int> SelectYChannels(bool imu);

}  // namespace pvsid

#endif  // PVSID_CONFIG_H_
