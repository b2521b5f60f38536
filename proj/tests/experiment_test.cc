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


#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "pvsid/common.h"
#include "pvsid/csv.h"
#include "pvsid/experiment.h"

namespace pvsid {
namespace {

ExperimentConfig SmallConfig() {
  ExperimentConfig c = DefaultConfig(Profile::kDesk);
  c.data.duration = 300.0;
  c.train.epochs = 20;
  c.train.estimator_hidden = {16, 16};
  c.train.predictor_hidden = {48, 48};
  c.ablation_n_xhat = {4};
  c.ablation_imu = {true};
  c.ablation_gamma = {0.9};
  c.ablation_seeds = {3};
  return c;
}

// Everything trained once and shared.
class HarnessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new ExperimentConfig(SmallConfig());
    log_ = new IoLog(CollectLog(*config_));
    splits_ = new DataSplits(SplitWindows(*config_, *log_));
    model_ = new PvsidModel(TrainDefaultModel(*config_, *splits_).model);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete splits_;
    delete log_;
    delete config_;
  }
  static ExperimentConfig* config_;
  static IoLog* log_;
  static DataSplits* splits_;
  static PvsidModel* model_;
};

ExperimentConfig* HarnessTest::config_ = nullptr;
IoLog* HarnessTest::log_ = nullptr;
DataSplits* HarnessTest::splits_ = nullptr;
PvsidModel* HarnessTest::model_ = nullptr;

TEST(HeaderTest, Format) {
  ExperimentConfig c = SmallConfig();
  c.seed = 42;
  const std::string h = HeaderComment(c);
  EXPECT_TRUE(std::regex_match(h, std::regex("pvsid config=[0-9a-f]{16} seed=42"))) << h;
  EXPECT_EQ(h, HeaderComment(c));
  c.nmpc.zeta = 0.25;
  EXPECT_NE(h, HeaderComment(c));
}

TEST_F(HarnessTest, LogAndSplits) {
  EXPECT_EQ(log_->size(), 15000);
  const IoLog again = CollectLog(*config_);
  EXPECT_EQ(again.y, log_->y);
  EXPECT_EQ(again.w, log_->w);
  // Contiguous 60/20/20 split, each part windowed on its own.
  const int span = config_->h_p + config_->h_f;
  EXPECT_EQ(splits_->train.size(), 9000u - span + 1);
  EXPECT_EQ(splits_->val.size(), 3000u - span + 1);
  EXPECT_EQ(splits_->test.size(), 3000u - span + 1);
}

TEST_F(HarnessTest, AblationGridRowsAndDuplicates) {
  ExperimentConfig c = *config_;
  c.ablation_seeds = {3, 3};
  const std::vector<AblationCell> cells = RunAblation(c, *splits_);
  ASSERT_EQ(cells.size(), 2u);
  ASSERT_TRUE(cells[0].error.empty());
  EXPECT_EQ(cells[0].kstep_mse.size(), c.h_f);
  EXPECT_EQ(cells[0].kstep_mse, cells[1].kstep_mse);

  std::stringstream ss;
  WriteAblationCsv(ss, {cells[0]}, HeaderComment(c));
  const CsvTable t = ReadCsv(ss);
  EXPECT_EQ(t.header, std::vector<std::string>({"n_xhat", "imu", "gamma", "seed", "k", "mse"}));
  EXPECT_EQ(t.rows.rows(), c.h_f);
}

TEST_F(HarnessTest, FailedCellIsRecorded) {
  ExperimentConfig c = *config_;
  c.train.epochs = 3;
  c.train.optimizer.learning_rate = 1e200;
  c.ablation_seeds = {1, 2};
  const std::vector<AblationCell> cells = RunAblation(c, *splits_);
  ASSERT_EQ(cells.size(), 2u);
  for (const AblationCell& cell : cells) {
    EXPECT_FALSE(cell.error.empty());
    EXPECT_EQ(cell.kstep_mse.size(), 0);
  }
  std::stringstream ss;
  WriteAblationCsv(ss, cells, HeaderComment(c));
  const CsvTable t = ReadCsv(ss);
  EXPECT_EQ(t.rows.rows(), 0);
  EXPECT_EQ(t.comments.size(), 3u);
}

TEST_F(HarnessTest, CompareIsDeterministic) {
  ExperimentConfig c = *config_;
  c.star.speed = 0.12;  // short run
  const CompareReport a = RunCompare(c, *model_);
  const CompareReport b = RunCompare(c, *model_);
  EXPECT_EQ(a.nmpc.measured, b.nmpc.measured);
  EXPECT_EQ(a.ik_ff.applied, b.ik_ff.applied);
  EXPECT_EQ(a.ratio, b.ratio);
  EXPECT_DOUBLE_EQ(a.ratio, a.ik_ff_rms_mm / a.nmpc_rms_mm);
  // Same reference and noise for both controllers.
  EXPECT_EQ(a.nmpc.reference, a.ik_ff.reference);
  std::stringstream s1, s2;
  WriteCompareCsv(s1, a, HeaderComment(c));
  WriteCompareCsv(s2, b, HeaderComment(c));
  EXPECT_EQ(s1.str(), s2.str());
}

// With a stiff inner loop the arm tracks its joint reference closely, so the
// feedforward baseline approaches the noise floor and NMPC has nothing left
// to gain. Only the upper side of the ratio is checked: models identified
// from smooth open-loop data can do much worse than feedforward here.
TEST(HarnessLimitTest, StiffInnerLoopLeavesLittleToGain) {
  ExperimentConfig c = SmallConfig();
  c.plant.kp = 20.0;
  c.plant.kd = 0.09;
  const IoLog log = CollectLog(c);
  const DataSplits splits = SplitWindows(c, log);
  const PvsidModel model = TrainDefaultModel(c, splits).model;
  c.star.speed = 0.12;
  const CompareReport stiff = RunCompare(c, model);

  ExperimentConfig soft = SmallConfig();
  soft.star.speed = 0.12;
  const double soft_ik_rms = RunControl(soft, nullptr, ControllerKind::kIkFeedforward).TipRms();
  EXPECT_LT(stiff.ik_ff_rms_mm, 0.25 * soft_ik_rms * 1e3);
  EXPECT_LT(stiff.ratio, 1.5);
}

}  // namespace
}  // namespace pvsid
