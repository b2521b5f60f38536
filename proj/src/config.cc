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

#include "pvsid/config.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace pvsid {
namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string FormatDouble(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

double ParseDouble(const std::string& text) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError("expected a number, got '" + text + "'");
  return v;
}

long long ParseInteger(const std::string& text) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError("expected an integer, got '" + text + "'");
  }
  return v;
}

bool ParseBool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("expected true/false, got '" + text + "'");
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(Trim(item));
  if (items.empty() || std::any_of(items.begin(), items.end(),
                                   [](const std::string& s) { return s.empty(); })) {
    throw ConfigError("expected a comma-separated list, got '" + text + "'");
  }
  return items;
}

template <typename T, typename F>
std::string JoinList(const std::vector<T>& values, F format) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format(values[i]);
  }
  return out;
}

using Check = std::function<bool(double)>;

Check Positive() {
  return [](double v) { return v > 0; };
}
Check NonNegative() {
  return [](double v) { return v >= 0; };
}
Check AtLeast(double lo) {
  return [lo](double v) { return v >= lo; };
}
Check Unit() {
  return [](double v) { return v > 0 && v <= 1; };
}
Check Fraction() {
  return [](double v) { return v > 0 && v < 1; };
}

struct Field {
  std::string section;
  std::string key;
  std::string constraint;  // human-readable, used in range errors
  std::function<void(ExperimentConfig&, const std::string&)> parse;
  std::function<std::string(const ExperimentConfig&)> format;
};

template <typename Get>
Field DoubleField(std::string section, std::string key, Get get, Check check,
                  std::string constraint) {
  return {std::move(section), std::move(key), constraint,
          [get, check, constraint](ExperimentConfig& c, const std::string& text) {
            const double v = ParseDouble(text);
            if (check && !check(v)) throw ConfigError("must be " + constraint);
            get(c) = v;
          },
          [get](const ExperimentConfig& c) {
            return FormatDouble(get(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Get>
Field IntField(std::string section, std::string key, Get get, Check check,
               std::string constraint) {
  return {std::move(section), std::move(key), constraint,
          [get, check, constraint](ExperimentConfig& c, const std::string& text) {
            const long long v = ParseInteger(text);
            if (check && !check(static_cast<double>(v))) {
              throw ConfigError("must be " + constraint);
            }
            get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(v);
          },
          [get](const ExperimentConfig& c) {
            return std::to_string(get(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Get>
Field BoolField(std::string section, std::string key, Get get) {
  return {std::move(section), std::move(key), "true or false",
          [get](ExperimentConfig& c, const std::string& text) { get(c) = ParseBool(text); },
          [get](const ExperimentConfig& c) {
            return std::string(get(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

template <typename Get>
Field StringField(std::string section, std::string key, Get get) {
  return {std::move(section), std::move(key), "a string",
          [get](ExperimentConfig& c, const std::string& text) { get(c) = text; },
          [get](const ExperimentConfig& c) { return get(const_cast<ExperimentConfig&>(c)); }};
}

template <typename Get>
Field IntListField(std::string section, std::string key, Get get, int min_value,
                   bool allow_empty) {
  const std::string constraint = "a list of integers >= " + std::to_string(min_value);
  return {std::move(section), std::move(key), constraint,
          [get, min_value, allow_empty, constraint](ExperimentConfig& c,
                                                    const std::string& text) {
            std::vector<int> values;
            if (!(allow_empty && (text.empty() || text == "none"))) {
              for (const std::string& item : SplitList(text)) {
                const long long v = ParseInteger(item);
                if (v < min_value) throw ConfigError("must be " + constraint);
                values.push_back(static_cast<int>(v));
              }
            }
            get(c) = values;
          },
          [get](const ExperimentConfig& c) {
            const auto& v = get(const_cast<ExperimentConfig&>(c));
            if (v.empty()) return std::string("none");
            return JoinList(v, [](int x) { return std::to_string(x); });
          }};
}

std::vector<Field> BuildFields() {
  using C = ExperimentConfig;
  std::vector<Field> f;
  // [experiment]
  f.push_back(IntField("experiment", "seed", [](C& c) -> std::uint64_t& { return c.seed; },
                       NonNegative(), ">= 0"));
  f.push_back(StringField("experiment", "log_file", [](C& c) -> std::string& { return c.log_file; }));
  f.push_back(
      StringField("experiment", "model_file", [](C& c) -> std::string& { return c.model_file; }));

  // [plant]
  auto plant_double = [&f](const char* key, double PlantParams::*member, Check check,
                           const char* constraint) {
    f.push_back(DoubleField("plant", key, [member](C& c) -> double& { return c.plant.*member; },
                            check, constraint));
  };
  f.push_back(DoubleField("plant", "l1", [](C& c) -> double& { return c.plant.geometry.l1; },
                          Positive(), "> 0"));
  f.push_back(DoubleField("plant", "l2", [](C& c) -> double& { return c.plant.geometry.l2; },
                          Positive(), "> 0"));
  plant_double("mass1", &PlantParams::mass1, Positive(), "> 0");
  plant_double("mass2", &PlantParams::mass2, Positive(), "> 0");
  plant_double("inertia1", &PlantParams::inertia1, Positive(), "> 0");
  plant_double("inertia2", &PlantParams::inertia2, Positive(), "> 0");
  plant_double("friction1", &PlantParams::friction1, Positive(), "> 0");
  plant_double("friction2", &PlantParams::friction2, Positive(), "> 0");
  plant_double("kp", &PlantParams::kp, Positive(), "> 0");
  plant_double("kd", &PlantParams::kd, Positive(), "> 0");
  plant_double("torque_limit", &PlantParams::torque_limit, NonNegative(), ">= 0");
  plant_double("vibration_frequency", &PlantParams::vibration_frequency, Positive(), "> 0");
  plant_double("vibration_damping", &PlantParams::vibration_damping, Unit(), "in (0, 1]");
  plant_double("vibration_coupling", &PlantParams::vibration_coupling, NonNegative(), ">= 0");
  plant_double("vibration_excitation", &PlantParams::vibration_excitation, NonNegative(),
               ">= 0");
  plant_double("imu_mount", &PlantParams::imu_mount, NonNegative(), ">= 0");
  plant_double("noise_angle", &PlantParams::noise_angle, NonNegative(), ">= 0");
  plant_double("noise_gyro", &PlantParams::noise_gyro, NonNegative(), ">= 0");
  plant_double("noise_accel", &PlantParams::noise_accel, NonNegative(), ">= 0");
  plant_double("noise_joint_velocity", &PlantParams::noise_joint_velocity, NonNegative(),
               ">= 0");
  plant_double("noise_tip", &PlantParams::noise_tip, NonNegative(), ">= 0");
  plant_double("period", &PlantParams::period, Positive(), "> 0");
  f.push_back(IntField("plant", "substeps", [](C& c) -> int& { return c.plant.substeps; },
                       AtLeast(1), ">= 1"));

  // [data]
  f.push_back(DoubleField("data", "duration", [](C& c) -> double& { return c.data.duration; },
                          Positive(), "> 0"));
  f.push_back(DoubleField("data", "speed_min", [](C& c) -> double& { return c.data.speed_min; },
                          Positive(), "> 0"));
  f.push_back(DoubleField("data", "speed_max", [](C& c) -> double& { return c.data.speed_max; },
                          Positive(), "> 0"));
  f.push_back(DoubleField("data", "margin", [](C& c) -> double& { return c.data.margin; },
                          NonNegative(), ">= 0"));
  f.push_back(DoubleField("data", "min_y", [](C& c) -> double& { return c.data.min_y; },
                          nullptr, "a number"));
  f.push_back(DoubleField("data", "train_fraction",
                          [](C& c) -> double& { return c.train_fraction; }, Fraction(),
                          "in (0, 1)"));
  f.push_back(DoubleField("data", "val_fraction", [](C& c) -> double& { return c.val_fraction; },
                          Fraction(), "in (0, 1)"));

  // [model]
  f.push_back(IntField("model", "h_p", [](C& c) -> int& { return c.h_p; }, AtLeast(1), ">= 1"));
  f.push_back(IntField("model", "h_f", [](C& c) -> int& { return c.h_f; }, AtLeast(1), ">= 1"));
  f.push_back(IntField("model", "n_xhat", [](C& c) -> int& { return c.train.n_xhat; },
                       AtLeast(1), ">= 1"));
  f.push_back(DoubleField("model", "gamma", [](C& c) -> double& { return c.train.gamma; },
                          Unit(), "in (0, 1]"));
  f.push_back(BoolField("model", "imu", [](C& c) -> bool& { return c.imu; }));
  f.push_back(IntListField("model", "estimator_hidden",
                           [](C& c) -> std::vector<int>& { return c.train.estimator_hidden; }, 1,
                           true));
  f.push_back(IntListField("model", "predictor_hidden",
                           [](C& c) -> std::vector<int>& { return c.train.predictor_hidden; }, 1,
                           true));

  // [train]
  f.push_back(IntField("train", "epochs", [](C& c) -> int& { return c.train.epochs; },
                       AtLeast(1), ">= 1"));
  f.push_back(IntField("train", "batch_size", [](C& c) -> int& { return c.train.batch_size; },
                       AtLeast(1), ">= 1"));
  f.push_back(DoubleField("train", "learning_rate",
                          [](C& c) -> double& { return c.train.optimizer.learning_rate; },
                          Positive(), "> 0"));
  f.push_back(DoubleField("train", "beta1",
                          [](C& c) -> double& { return c.train.optimizer.beta1; },
                          [](double v) { return v >= 0 && v < 1; }, "in [0, 1)"));
  f.push_back(DoubleField("train", "beta2",
                          [](C& c) -> double& { return c.train.optimizer.beta2; },
                          [](double v) { return v >= 0 && v < 1; }, "in [0, 1)"));
  f.push_back(DoubleField("train", "epsilon",
                          [](C& c) -> double& { return c.train.optimizer.epsilon; }, Positive(),
                          "> 0"));
  f.push_back(DoubleField("train", "weight_decay",
                          [](C& c) -> double& { return c.train.optimizer.weight_decay; },
                          NonNegative(), ">= 0"));
  f.push_back(
      {"train", "lr_schedule", "constant or cosine",
       [](C& c, const std::string& text) {
         if (text == "constant") {
           c.train.schedule = LearningRateSchedule::kConstant;
         } else if (text == "cosine") {
           c.train.schedule = LearningRateSchedule::kCosine;
         } else {
           throw ConfigError("must be constant or cosine");
         }
       },
       [](const C& c) {
         return std::string(c.train.schedule == LearningRateSchedule::kCosine ? "cosine"
                                                                              : "constant");
       }});

  // [nmpc]
  f.push_back(DoubleField("nmpc", "zeta", [](C& c) -> double& { return c.nmpc.zeta; },
                          NonNegative(), ">= 0"));
  f.push_back(DoubleField("nmpc", "lambda", [](C& c) -> double& { return c.nmpc.lambda; },
                          Positive(), "> 0"));
  f.push_back(IntField("nmpc", "max_iterations",
                       [](C& c) -> int& { return c.nmpc.max_iterations; }, AtLeast(1), ">= 1"));

  // [trajectory]
  f.push_back(DoubleField("trajectory", "center_x",
                          [](C& c) -> double& { return c.star.center(0); }, nullptr, "a number"));
  f.push_back(DoubleField("trajectory", "center_y",
                          [](C& c) -> double& { return c.star.center(1); }, nullptr, "a number"));
  f.push_back(DoubleField("trajectory", "outer_radius",
                          [](C& c) -> double& { return c.star.outer_radius; }, Positive(),
                          "> 0"));
  f.push_back(DoubleField("trajectory", "inner_ratio",
                          [](C& c) -> double& { return c.star.inner_ratio; }, Positive(), "> 0"));
  f.push_back(IntField("trajectory", "points", [](C& c) -> int& { return c.star.points; },
                       AtLeast(2), ">= 2"));
  f.push_back(DoubleField("trajectory", "speed", [](C& c) -> double& { return c.star.speed; },
                          Positive(), "> 0"));

  // [ablation]
  f.push_back(IntListField("ablation", "n_xhat",
                           [](C& c) -> std::vector<int>& { return c.ablation_n_xhat; }, 1, false));
  f.push_back({"ablation", "imu", "a list of true/false",
               [](C& c, const std::string& text) {
                 c.ablation_imu.clear();
                 for (const std::string& item : SplitList(text)) {
                   c.ablation_imu.push_back(ParseBool(item));
                 }
               },
               [](const C& c) {
                 return JoinList(c.ablation_imu,
                                 [](bool b) { return std::string(b ? "true" : "false"); });
               }});
  f.push_back({"ablation", "gamma", "a list of values in (0, 1]",
               [](C& c, const std::string& text) {
                 c.ablation_gamma.clear();
                 for (const std::string& item : SplitList(text)) {
                   const double v = ParseDouble(item);
                   if (!(v > 0 && v <= 1)) throw ConfigError("must be a list of values in (0, 1]");
                   c.ablation_gamma.push_back(v);
                 }
               },
               [](const C& c) { return JoinList(c.ablation_gamma, FormatDouble); }});
  f.push_back({"ablation", "seeds", "a list of integers >= 0",
               [](C& c, const std::string& text) {
                 c.ablation_seeds.clear();
                 for (const std::string& item : SplitList(text)) {
                   const long long v = ParseInteger(item);
                   if (v < 0) throw ConfigError("must be a list of integers >= 0");
                   c.ablation_seeds.push_back(static_cast<std::uint64_t>(v));
                 }
               },
               [](const C& c) {
                 return JoinList(c.ablation_seeds,
                                 [](std::uint64_t s) { return std::to_string(s); });
               }});
  return f;
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = BuildFields();
  return fields;
}

struct Entry {
  int line = 0;
  std::string section;
  std::string key;
  std::string value;
};

}  // namespace

const char* ProfileName(Profile profile) {
  return profile == Profile::kPaper ? "paper" : "desk";
}

Profile ParseProfile(const std::string& name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "paper") return Profile::kPaper;
  throw InvalidArgument("unknown profile '" + name + "' (expected desk or paper)");
}

ExperimentConfig DefaultConfig(Profile profile) {
  ExperimentConfig c;
  c.profile = profile;
  c.data.duration = 3600.0;
  c.train.epochs = 150;
  c.train.schedule = LearningRateSchedule::kCosine;
  c.train.batch_size = 256;
  c.train.n_xhat = 8;
  c.train.gamma = 0.9;
  c.train.estimator_hidden = {32, 32, 32};
  c.train.predictor_hidden = {128, 128, 128};
  c.ablation_n_xhat = {2, 4, 6, 8, 10};
  c.ablation_imu = {true, false};
  c.ablation_gamma = {0.9};
  c.ablation_seeds = {1};
  // Residuals are normalized, so the damping scale differs from raw units.
  c.nmpc.lambda = 1.0;
  if (profile == Profile::kPaper) {
    c.nmpc.lambda = 1e-7;
    c.h_p = 50;
    c.h_f = 100;
    c.data.duration = 3600.0;
    c.train_fraction = 0.58;
    c.val_fraction = 0.21;
    c.train.epochs = 100000;
    c.train.predictor_hidden = {256, 256, 256};
  }
  return c;
}

void ValidateConfig(const ExperimentConfig& c) {
  if (c.train_fraction + c.val_fraction >= 1.0) {
    throw ConfigError("data.train_fraction + data.val_fraction must be < 1");
  }
  if (c.data.speed_max < c.data.speed_min) {
    throw ConfigError("data.speed_max must be >= data.speed_min");
  }
  if (c.ablation_n_xhat.empty() || c.ablation_imu.empty() || c.ablation_gamma.empty() ||
      c.ablation_seeds.empty()) {
    throw ConfigError("ablation grids must be nonempty");
  }
  for (const std::string* path : {&c.log_file, &c.model_file}) {
    if (!path->empty() && !std::filesystem::exists(*path)) {
      throw ConfigError("referenced file does not exist: " + *path);
    }
  }
  c.plant.Validate();
  c.nmpc.Validate();
}

ExperimentConfig ParseConfigText(const std::string& text, std::optional<Profile> profile,
                                 const std::string& source) {
  std::vector<Entry> entries;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int number = 0;
  std::optional<Profile> file_profile;
  std::set<std::string> seen;
  while (std::getline(is, line)) {
    ++number;
    const std::string where = source + ":" + std::to_string(number) + ": ";
    std::string s = line;
    const size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = Trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + "malformed section header");
      section = Trim(s.substr(1, s.size() - 2));
      static const std::set<std::string> kSections = {"experiment", "plant",      "data",
                                                      "model",      "train",      "nmpc",
                                                      "trajectory", "ablation"};
      if (!kSections.count(section)) {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    Entry e{number, section, Trim(s.substr(0, eq)), Trim(s.substr(eq + 1))};
    const std::string full = e.section + "." + e.key;
    if (!seen.insert(full).second) throw ConfigError(where + full + ": duplicate key");
    if (full == "experiment.profile") {
      try {
        file_profile = ParseProfile(e.value);
      } catch (const InvalidArgument& err) {
        throw ConfigError(where + full + ": " + err.what());
      }
      continue;
    }
    entries.push_back(std::move(e));
  }
  if (profile && file_profile && *profile != *file_profile) {
    throw ConfigError(source + ": experiment.profile conflicts with the requested profile");
  }
  if (!profile && !file_profile) {
    throw ConfigError(source + ": missing required key experiment.profile");
  }
  ExperimentConfig config = DefaultConfig(profile ? *profile : *file_profile);
  for (const Entry& e : entries) {
    const std::string where = source + ":" + std::to_string(e.line) + ": ";
    const std::string full = e.section + "." + e.key;
    const auto& fields = Fields();
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) {
      return f.section == e.section && f.key == e.key;
    });
    if (it == fields.end()) throw ConfigError(where + "unknown key " + full);
    try {
      it->parse(config, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(where + full + ": " + err.what());
    }
  }
  try {
    ValidateConfig(config);
  } catch (const ConfigError& err) {
    throw ConfigError(source + ": " + err.what());
  } catch (const InvalidArgument& err) {
    throw ConfigError(source + ": " + err.what());
  }
  return config;
}

ExperimentConfig ParseConfigFile(const std::string& path, std::optional<Profile> profile) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfigText(buffer.str(), profile, path);
}

std::string SerializeConfig(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  out += "[experiment]\nprofile = ";
  out += ProfileName(config.profile);
  out += '\n';
  section = "experiment";
  for (const Field& f : Fields()) {
    if (f.section != section) {
      section = f.section;
      out += "\n[" + section + "]\n";
    }
    out += f.key + " = " + f.format(config) + '\n';
  }
  return out;
}

std::string ConfigFingerprint(const ExperimentConfig& config) {
  return ToHex(Fnv1a64(SerializeConfig(config)));
}

std::vector<int> SelectYChannels(bool imu) {
  std::vector<int> channels;
  for (int c = 0; c < kNumYChannels; ++c) {
    const bool is_imu =
        std::find(kImuChannels.begin(), kImuChannels.end(), c) != kImuChannels.end();
    if (imu || !is_imu) channels.push_back(c);
  }
  return channels;
}

TrainConfig MakeTrainConfig(const ExperimentConfig& config, int n_xhat, bool imu,
                            double gamma, std::uint64_t seed) {
  TrainConfig tc = config.train;
  tc.n_xhat = n_xhat;
  tc.gamma = gamma;
  tc.seed = seed;
  tc.y_channels = SelectYChannels(imu);
  return tc;
}

}  // namespace pvsid
