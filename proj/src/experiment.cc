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

#include "pvsid/experiment.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "pvsid/csv.h"
#include "pvsid/kinematics.h"
#include "pvsid/plant.h"

namespace pvsid {

std::string HeaderComment(const ExperimentConfig& config) {
  return "pvsid config=" + ConfigFingerprint(config) + " seed=" + std::to_string(config.seed);
}

DerivedSeeds DeriveSeeds(std::uint64_t seed) {
  std::mt19937_64 seeder(seed);
  DerivedSeeds s;
  s.waypoints = seeder();
  s.data_noise = seeder();
  s.control_noise = seeder();
  return s;
}

IoLog CollectLog(const ExperimentConfig& config, Trajectory* reference) {
  const DerivedSeeds seeds = DeriveSeeds(config.seed);
  WaypointOptions options = config.data;
  options.period = config.plant.period;
  Trajectory traj = WaypointTrajectory(config.plant.geometry, options, seeds.waypoints);
  const MatrixXd u = TrajectoryToJoints(config.plant.geometry, traj);
  const Vector2d start = u.row(0).transpose();
  IoLog log = SimulateLog(config.plant, u, RestState(start), seeds.data_noise);
  if (reference) *reference = std::move(traj);
  return log;
}

DataSplits SplitWindows(const ExperimentConfig& config, const IoLog& log) {
  const Index n = log.size();
  const Index n_train = static_cast<Index>(std::floor(config.train_fraction * n));
  const Index n_val = static_cast<Index>(std::floor(config.val_fraction * n));
  const Index n_test = n - n_train - n_val;
  DataSplits s;
  s.train = MakeWindows(log.Slice(0, n_train), config.h_p, config.h_f);
  s.val = MakeWindows(log.Slice(n_train, n_val), config.h_p, config.h_f);
  s.test = MakeWindows(log.Slice(n_train + n_val, n_test), config.h_p, config.h_f);
  return s;
}

TrainResult TrainModel(const ExperimentConfig& config, const DataSplits& splits, int n_xhat,
                       bool imu, double gamma, std::uint64_t seed,
                       const EpochCallback& on_epoch) {
  TrainResult result =
      Train(splits.train, splits.val, MakeTrainConfig(config, n_xhat, imu, gamma, seed), on_epoch);
  result.model.train_fingerprint = ConfigFingerprint(config);
  return result;
}

TrainResult TrainDefaultModel(const ExperimentConfig& config, const DataSplits& splits,
                              const EpochCallback& on_epoch) {
  return TrainModel(config, splits, config.train.n_xhat, config.imu, config.train.gamma,
                    config.seed, on_epoch);
}

std::vector<AblationCell> RunAblation(const ExperimentConfig& config, const DataSplits& splits,
                                      bool verbose) {
  std::vector<AblationCell> cells;
  for (int n_xhat : config.ablation_n_xhat) {
    for (bool imu : config.ablation_imu) {
      for (double gamma : config.ablation_gamma) {
        for (std::uint64_t seed : config.ablation_seeds) {
          AblationCell cell{n_xhat, imu, gamma, seed, {}, {}};
          try {
            const TrainResult r = TrainModel(config, splits, n_xhat, imu, gamma, seed);
            cell.kstep_mse = KStepMse(r.model, splits.test);
          } catch (const NumericError& e) {
            cell.error = e.what();
          }
          if (verbose) {
            std::cerr << "ablate n_xhat=" << n_xhat << " imu=" << imu << " gamma=" << gamma
                      << " seed=" << seed;
            if (cell.error.empty()) {
              std::cerr << " mse[1..5]=" << MeanShortHorizonMse(cell.kstep_mse) << '\n';
            } else {
              std::cerr << " failed: " << cell.error << '\n';
            }
          }
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

double MeanShortHorizonMse(const VectorXd& kstep_mse, int k_max) {
  const Index k = std::min<Index>(k_max, kstep_mse.size());
  if (k == 0) return std::numeric_limits<double>::quiet_NaN();
  return kstep_mse.head(k).mean();
}

Trajectory StarReference(const ExperimentConfig& config) {
  StarOptions star = config.star;
  star.period = config.plant.period;
  return StarTrajectory(config.plant.geometry, star);
}

ControlLog RunControl(const ExperimentConfig& config, const PvsidModel* model,
                      ControllerKind controller) {
  ClosedLoopOptions options;
  options.controller = controller;
  options.nmpc = config.nmpc;
  options.warmup_steps = model ? model->h_p : config.h_p;
  return RunClosedLoop(config.plant, model, options, StarReference(config),
                       DeriveSeeds(config.seed).control_noise);
}

CompareReport RunCompare(const ExperimentConfig& config, const PvsidModel& model) {
  CompareReport report;
  report.nmpc = RunControl(config, &model, ControllerKind::kNmpc);
  report.ik_ff = RunControl(config, &model, ControllerKind::kIkFeedforward);
  report.nmpc_rms_mm = report.nmpc.TipRms() * 1e3;
  report.ik_ff_rms_mm = report.ik_ff.TipRms() * 1e3;
  report.ratio = report.ik_ff_rms_mm / report.nmpc_rms_mm;
  return report;
}

void WriteHistoryCsv(std::ostream& os, const std::vector<EpochRecord>& history,
                     const std::string& comment) {
  WriteCommentLine(os, comment);
  os << "epoch,train_loss,val_loss\n";
  for (const EpochRecord& r : history) {
    WriteCsvRow(os, {static_cast<double>(r.epoch), r.train_loss, r.val_loss});
  }
}

void WriteKStepCsv(std::ostream& os, const VectorXd& mse, const std::string& comment) {
  WriteCommentLine(os, comment);
  os << "k,mse\n";
  for (Index k = 0; k < mse.size(); ++k) {
    WriteCsvRow(os, {static_cast<double>(k + 1), mse(k)});
  }
}

void WriteAblationCsv(std::ostream& os, const std::vector<AblationCell>& cells,
                      const std::string& comment) {
  WriteCommentLine(os, comment);
  os << "n_xhat,imu,gamma,seed,k,mse\n";
  for (const AblationCell& c : cells) {
    if (!c.error.empty()) {
      os << "# failed n_xhat=" << c.n_xhat << " imu=" << (c.imu ? 1 : 0)
         << " gamma=" << FormatCsvNumber(c.gamma) << " seed=" << c.seed << ": " << c.error
         << '\n';
      continue;
    }
    for (Index k = 0; k < c.kstep_mse.size(); ++k) {
      WriteCsvRow(os, {static_cast<double>(c.n_xhat), c.imu ? 1.0 : 0.0, c.gamma,
                       static_cast<double>(c.seed), static_cast<double>(k + 1),
                       c.kstep_mse(k)});
    }
  }
}

void WriteCompareCsv(std::ostream& os, const CompareReport& report, const std::string& comment) {
  WriteCommentLine(os, comment);
  os << "controller,tip_rms_mm,tip_mse_mm2\n";
  os << "nmpc," << FormatCsvNumber(report.nmpc_rms_mm) << ','
     << FormatCsvNumber(report.nmpc_rms_mm * report.nmpc_rms_mm) << '\n';
  os << "ik_ff," << FormatCsvNumber(report.ik_ff_rms_mm) << ','
     << FormatCsvNumber(report.ik_ff_rms_mm * report.ik_ff_rms_mm) << '\n';
  os << "# ratio_ik_ff_over_nmpc=" << FormatCsvNumber(report.ratio) << '\n';
}

}  // namespace pvsid
