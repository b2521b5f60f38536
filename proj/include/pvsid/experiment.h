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

#ifndef PVSID_EXPERIMENT_H_
#define PVSID_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pvsid/config.h"
#include "pvsid/io_log.h"
#include "pvsid/nmpc.h"
#include "pvsid/pvsid.h"

namespace pvsid {

// `pvsid config=<fingerprint> seed=<seed>`, the first line of every output.
std::string HeaderComment(const ExperimentConfig& config);

// Seeds derived from the experiment seed for each random stream.
struct DerivedSeeds {
  std::uint64_t waypoints;
  std::uint64_t data_noise;
  std::uint64_t control_noise;
};
DerivedSeeds DeriveSeeds(std::uint64_t seed);

// Random-waypoint identification run: the tip path is converted to joint
// references by inverse kinematics and fed to the simulated plant.
IoLog CollectLog(const ExperimentConfig& config, Trajectory* reference = nullptr);

// Contiguous train / validation / test split of the log, windowed per split.
struct DataSplits {
  std::vector<WindowSample> train;
  std::vector<WindowSample> val;
  std::vector<WindowSample> test;
};
DataSplits SplitWindows(const ExperimentConfig& config, const IoLog& log);

TrainResult TrainModel(const ExperimentConfig& config, const DataSplits& splits, int n_xhat,
                       bool imu, double gamma, std::uint64_t seed,
                       const EpochCallback& on_epoch = nullptr);

// Training run with the config's own n_xhat / imu / gamma / seed.
TrainResult TrainDefaultModel(const ExperimentConfig& config, const DataSplits& splits,
                              const EpochCallback& on_epoch = nullptr);

struct AblationCell {
  int n_xhat = 0;
  bool imu = true;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  VectorXd kstep_mse;  // empty when training failed
  std::string error;
};

// Trains the full grid in deterministic order (n_xhat, imu, gamma, seed) and
// evaluates k-step MSE on the test split. A failed cell keeps its error and
// the run continues.
std::vector<AblationCell> RunAblation(const ExperimentConfig& config, const DataSplits& splits,
                                      bool verbose = false);

// Mean of the k-step MSE over k = 1..k_max.
double MeanShortHorizonMse(const VectorXd& kstep_mse, int k_max = 5);

Trajectory StarReference(const ExperimentConfig& config);

ControlLog RunControl(const ExperimentConfig& config, const PvsidModel* model,
                      ControllerKind controller);

struct CompareReport {
  ControlLog nmpc;
  ControlLog ik_ff;
  double nmpc_rms_mm = 0;
  double ik_ff_rms_mm = 0;
  double ratio = 0;  // ik_ff / nmpc
};

CompareReport RunCompare(const ExperimentConfig& config, const PvsidModel& model);

void WriteHistoryCsv(std::ostream& os, const std::vector<EpochRecord>& history,
                     const std::string& comment);
void WriteKStepCsv(std::ostream& os, const VectorXd& mse, const std::string& comment);
// Columns n_xhat,imu,gamma,seed,k,mse; failed cells contribute a comment line.
void WriteAblationCsv(std::ostream& os, const std::vector<AblationCell>& cells,
                      const std::string& comment);
void WriteCompareCsv(std::ostream& os, const CompareReport& report, const std::string& comment);

}  // namespace pvsid

#endif  // PVSID_EXPERIMENT_H_
