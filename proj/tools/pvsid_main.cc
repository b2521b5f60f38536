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

// Command-line driver: collect -> train -> eval / ablate -> control / compare.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pvsid/config.h"
#include "pvsid/experiment.h"
#include "pvsid/io_log.h"
#include "pvsid/kinematics.h"
#include "pvsid/model_io.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct Context {
  pvsid::ExperimentConfig config;
  fs::path out;
  std::string header;
};

std::ofstream OpenOutput(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pvsid::InvalidArgument("cannot write " + path.string());
  return out;
}

pvsid::IoLog ObtainLog(const Context& ctx) {
  fs::path path = ctx.config.log_file.empty() ? ctx.out / "iolog.csv"
                                              : fs::path(ctx.config.log_file);
  if (fs::exists(path)) {
    std::ifstream in(path);
    std::cerr << "reading " << path.string() << '\n';
    return pvsid::ReadIoLogCsv(in);
  }
  std::cerr << "no log found, collecting\n";
  pvsid::Trajectory reference;
  pvsid::IoLog log = pvsid::CollectLog(ctx.config, &reference);
  auto out = OpenOutput(ctx.out / "iolog.csv");
  pvsid::WriteIoLogCsv(out, log, ctx.header);
  auto traj_out = OpenOutput(ctx.out / "waypoints.csv");
  pvsid::WriteTrajectoryCsv(traj_out, reference, ctx.header);
  return log;
}

int Collect(const Context& ctx) {
  pvsid::Trajectory reference;
  pvsid::IoLog log = pvsid::CollectLog(ctx.config, &reference);
  auto out = OpenOutput(ctx.out / "iolog.csv");
  pvsid::WriteIoLogCsv(out, log, ctx.header);
  auto traj_out = OpenOutput(ctx.out / "waypoints.csv");
  pvsid::WriteTrajectoryCsv(traj_out, reference, ctx.header);
  std::cerr << "collected " << log.size() << " samples\n";
  return 0;
}

pvsid::PvsidModel TrainAndSave(const Context& ctx) {
  const pvsid::IoLog log = ObtainLog(ctx);
  const pvsid::DataSplits splits = pvsid::SplitWindows(ctx.config, log);
  std::cerr << "training on " << splits.train.size() << " windows ("
            << splits.val.size() << " validation)\n";
  const int epochs = ctx.config.train.epochs;
  auto progress = [epochs](const pvsid::EpochRecord& r) {
    if (r.epoch == 1 || r.epoch % 10 == 0 || r.epoch == epochs) {
      std::cerr << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss
                << '\n';
    }
  };
  pvsid::TrainResult result = pvsid::TrainDefaultModel(ctx.config, splits, progress);
  std::cerr << "best epoch " << result.best_epoch << '\n';
  pvsid::SaveModel((ctx.out / "model.json").string(), result.model);
  auto out = OpenOutput(ctx.out / "history.csv");
  pvsid::WriteHistoryCsv(out, result.history, ctx.header);
  return result.model;
}

pvsid::PvsidModel ObtainModel(const Context& ctx) {
  fs::path path = ctx.config.model_file.empty() ? ctx.out / "model.json"
                                                : fs::path(ctx.config.model_file);
  if (fs::exists(path)) {
    std::cerr << "loading " << path.string() << '\n';
    return pvsid::LoadModel(path.string());
  }
  std::cerr << "no model found, training\n";
  return TrainAndSave(ctx);
}

int Eval(const Context& ctx) {
  const pvsid::PvsidModel model = ObtainModel(ctx);
  const pvsid::DataSplits splits = pvsid::SplitWindows(ctx.config, ObtainLog(ctx));
  const pvsid::VectorXd mse = pvsid::KStepMse(model, splits.test);
  auto out = OpenOutput(ctx.out / "kstep_mse.csv");
  pvsid::WriteKStepCsv(out, mse, ctx.header);
  std::cerr << "mean MSE k=1..5: " << pvsid::MeanShortHorizonMse(mse) << " m^2\n";
  return 0;
}

int Ablate(const Context& ctx) {
  const pvsid::DataSplits splits = pvsid::SplitWindows(ctx.config, ObtainLog(ctx));
  const auto cells = pvsid::RunAblation(ctx.config, splits, /*verbose=*/true);
  auto out = OpenOutput(ctx.out / "ablation.csv");
  pvsid::WriteAblationCsv(out, cells, ctx.header);
  return 0;
}

int Control(const Context& ctx, const std::string& controller) {
  auto star_out = OpenOutput(ctx.out / "star.csv");
  pvsid::WriteTrajectoryCsv(star_out, pvsid::StarReference(ctx.config), ctx.header);
  pvsid::ControlLog log;
  if (controller == "ik_ff") {
    log = pvsid::RunControl(ctx.config, nullptr, pvsid::ControllerKind::kIkFeedforward);
  } else {
    const pvsid::PvsidModel model = ObtainModel(ctx);
    log = pvsid::RunControl(ctx.config, &model, pvsid::ControllerKind::kNmpc);
  }
  auto out = OpenOutput(ctx.out / ("control_" + controller + ".csv"));
  pvsid::WriteControlLogCsv(out, log, ctx.header);
  std::cerr << controller << " tip RMS " << log.TipRms() * 1e3 << " mm\n";
  return 0;
}

int Compare(const Context& ctx) {
  const pvsid::PvsidModel model = ObtainModel(ctx);
  const pvsid::CompareReport report = pvsid::RunCompare(ctx.config, model);
  auto star_out = OpenOutput(ctx.out / "star.csv");
  pvsid::WriteTrajectoryCsv(star_out, pvsid::StarReference(ctx.config), ctx.header);
  auto nmpc_out = OpenOutput(ctx.out / "control_nmpc.csv");
  pvsid::WriteControlLogCsv(nmpc_out, report.nmpc, ctx.header);
  auto ik_out = OpenOutput(ctx.out / "control_ik_ff.csv");
  pvsid::WriteControlLogCsv(ik_out, report.ik_ff, ctx.header);
  auto summary = OpenOutput(ctx.out / "compare.csv");
  pvsid::WriteCompareCsv(summary, report, ctx.header);
  std::cout << "nmpc tip RMS " << report.nmpc_rms_mm << " mm, ik_ff tip RMS "
            << report.ik_ff_rms_mm << " mm, ratio " << report.ratio << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive virtual sensor identification and NMPC on a simulated 2-DoF arm"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string profile_name;
  std::string controller = "nmpc";
  app.add_option("--config", config_path, "Experiment config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Experiment seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--profile", profile_name, "Default profile")
      ->check(CLI::IsMember({"desk", "paper"}));

  auto* collect = app.add_subcommand("collect", "Simulate the identification run");
  auto* train = app.add_subcommand("train", "Train estimator and predictor");
  auto* eval = app.add_subcommand("eval", "k-step prediction MSE on the test split");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the ablation grid");
  auto* control = app.add_subcommand("control", "Track the star trajectory");
  control->add_option("--controller", controller, "nmpc or ik_ff")
      ->check(CLI::IsMember({"nmpc", "ik_ff"}))
      ->capture_default_str();
  auto* compare = app.add_subcommand("compare", "NMPC versus IK feedforward on the star");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    Context ctx;
    std::optional<pvsid::Profile> profile;
    if (!profile_name.empty()) profile = pvsid::ParseProfile(profile_name);
    if (config_path.empty()) {
      ctx.config = pvsid::DefaultConfig(profile.value_or(pvsid::Profile::kDesk));
    } else {
      ctx.config = pvsid::ParseConfigFile(config_path, profile);
    }
    if (seed) ctx.config.seed = *seed;
    ctx.out = out_dir;
    fs::create_directories(ctx.out);
    ctx.header = pvsid::HeaderComment(ctx.config);

    if (collect->parsed()) return Collect(ctx);
    if (train->parsed()) {
      TrainAndSave(ctx);
      return 0;
    }
    if (eval->parsed()) return Eval(ctx);
    if (ablate->parsed()) return Ablate(ctx);
    if (control->parsed()) return Control(ctx, controller);
    if (compare->parsed()) return Compare(ctx);
  } catch (const pvsid::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const pvsid::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
