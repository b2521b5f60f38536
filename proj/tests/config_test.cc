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

#include <cstdio>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

namespace pvsid {
namespace {

std::string ErrorOf(const std::string& text, std::optional<Profile> profile = std::nullopt) {
  try {
    ParseConfigText(text, profile, "test.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, EmptyTextWithProfileIsDefault) {
  const ExperimentConfig parsed = ParseConfigText("", Profile::kDesk);
  EXPECT_EQ(SerializeConfig(parsed), SerializeConfig(DefaultConfig(Profile::kDesk)));
  EXPECT_EQ(parsed.h_p, 10);
  EXPECT_EQ(parsed.h_f, 20);
  EXPECT_EQ(parsed.train.n_xhat, 8);
  EXPECT_EQ(parsed.train.gamma, 0.9);
  EXPECT_EQ(parsed.nmpc.zeta, 0.5);
  EXPECT_EQ(parsed.nmpc.lambda, 1.0);
  EXPECT_EQ(parsed.plant.period, 0.02);

  const ExperimentConfig paper = ParseConfigText("[experiment]\nprofile = paper\n");
  EXPECT_EQ(paper.profile, Profile::kPaper);
  EXPECT_EQ(paper.h_p, 50);
  EXPECT_EQ(paper.h_f, 100);
  EXPECT_EQ(paper.nmpc.lambda, 1e-7);
  EXPECT_EQ(paper.train.predictor_hidden, std::vector<int>({256, 256, 256}));
}

TEST(ConfigTest, RangeErrorNamesKeyAndLine) {
  const std::string msg = ErrorOf("[model]\n# comment\ngamma = 1.5\n", Profile::kDesk);
  EXPECT_NE(msg.find("gamma"), std::string::npos) << msg;
  EXPECT_NE(msg.find("test.ini:3"), std::string::npos) << msg;
}

TEST(ConfigTest, Rejections) {
  EXPECT_NE(ErrorOf("[model]\nbogus = 1\n", Profile::kDesk).find("bogus"), std::string::npos);
  EXPECT_NE(ErrorOf("[model]\nh_p = ten\n", Profile::kDesk).find("h_p"), std::string::npos);
  EXPECT_NE(ErrorOf("[model]\nh_p = 3.5\n", Profile::kDesk).find("h_p"), std::string::npos);
  EXPECT_NE(ErrorOf("[model]\nimu = maybe\n", Profile::kDesk).find("imu"), std::string::npos);
  EXPECT_NE(ErrorOf("[model]\nh_p = 3\nh_p = 4\n", Profile::kDesk).find("h_p"),
            std::string::npos);
  EXPECT_NE(ErrorOf("h_p = 3\n", Profile::kDesk), "");            // key outside a section
  EXPECT_NE(ErrorOf("[nowhere]\n", Profile::kDesk), "");          // unknown section
  EXPECT_NE(ErrorOf("[model]\nh_p\n", Profile::kDesk), "");       // no '='
  EXPECT_NE(ErrorOf("[model]\nh_p = 3\n").find("profile"), std::string::npos);  // required
  EXPECT_NE(ErrorOf("[experiment]\nprofile = huge\n"), "");
  EXPECT_NE(ErrorOf("[ablation]\ngamma = 0.9, 2\n", Profile::kDesk).find("gamma"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[experiment]\nlog_file = /nonexistent/log.csv\n", Profile::kDesk), "");
  EXPECT_NE(ErrorOf("[data]\ntrain_fraction = 0.7\nval_fraction = 0.4\n", Profile::kDesk), "");
}

TEST(ConfigTest, RoundTrip) {
  const std::string text =
      "[experiment]\nprofile = desk\nseed = 42\n"
      "[plant]\nkp = 0.75\nnoise_tip = 3e-4\n"
      "[model]\nh_p = 7\nimu = false\npredictor_hidden = 64, 32\n"
      "[train]\nlr_schedule = constant\nlearning_rate = 0.0025\n"
      "[ablation]\nn_xhat = 2, 6\ngamma = 0.9, 1\nseeds = 1, 2, 3\n"
      "[trajectory]\nspeed = 0.05\n";
  const ExperimentConfig a = ParseConfigText(text);
  EXPECT_EQ(a.seed, 42u);
  EXPECT_EQ(a.plant.kp, 0.75);
  EXPECT_FALSE(a.imu);
  EXPECT_EQ(a.train.schedule, LearningRateSchedule::kConstant);
  EXPECT_EQ(a.ablation_seeds, std::vector<std::uint64_t>({1, 2, 3}));
  const std::string serialized = SerializeConfig(a);
  const ExperimentConfig b = ParseConfigText(serialized);
  EXPECT_EQ(SerializeConfig(b), serialized);
  EXPECT_EQ(ConfigFingerprint(a), ConfigFingerprint(b));
  EXPECT_NE(ConfigFingerprint(a), ConfigFingerprint(DefaultConfig(Profile::kDesk)));
}

TEST(ConfigTest, ProfileFlagOverridesFileDefaults) {
  const ExperimentConfig c = ParseConfigText("[model]\nh_f = 5\n", Profile::kPaper);
  EXPECT_EQ(c.h_p, 50);
  EXPECT_EQ(c.h_f, 5);
}

TEST(ConfigTest, FileParsing) {
  const std::string path = ::testing::TempDir() + "pvsid_config_test.ini";
  {
    std::ofstream out(path);
    out << "[experiment]\nprofile = desk\n[model]\nn_xhat = 4\n";
  }
  EXPECT_EQ(ParseConfigFile(path).train.n_xhat, 4);
  std::remove(path.c_str());
  EXPECT_THROW(ParseConfigFile(path), InvalidArgument);
}

TEST(ConfigTest, ChannelSelection) {
  EXPECT_EQ(SelectYChannels(true), std::vector<int>({0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(SelectYChannels(false), std::vector<int>({0, 1, 5, 6}));
  const ExperimentConfig c = DefaultConfig(Profile::kDesk);
  const TrainConfig t = MakeTrainConfig(c, 6, false, 1.0, 9);
  EXPECT_EQ(t.n_xhat, 6);
  EXPECT_EQ(t.gamma, 1.0);
  EXPECT_EQ(t.seed, 9u);
  EXPECT_EQ(t.y_channels, SelectYChannels(false));
}

}  // namespace
}  // namespace pvsid
