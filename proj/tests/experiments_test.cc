// Copyright 2026 The vmsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vmsched/experiments.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "vmsched/agent.h"
#include "vmsched/env.h"
#include "vmsched/errors.h"
#include "vmsched/trainer.h"

namespace vmsched {
namespace {

namespace fs = std::filesystem;

RunConfig TinyConfig() {
  RunConfig c;
  c.seed = 3;
  c.scenario.n_pms_initial = 2;
  c.workload.trace_length = 60;
  c.agent.epochs = 2;
  c.agent.episodes_per_epoch = 2;
  c.agent.batch_size = 16;
  c.agent.hidden = 8;
  c.agent.depth = 3;
  c.agent.buffer_capacity = 500;
  c.Resolve();
  return c;
}

class ExperimentsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("vmsched_experiments_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path TrainTiny(const std::string &name, AgentKind kind = AgentKind::kCvd) {
    RunConfig c = TinyConfig();
    c.agent.kind = kind;
    Trainer(c).Run(root_ / name);
    return root_ / name / "checkpoint.bin";
  }

  fs::path root_;
};

TEST_F(ExperimentsTest, NamedPolicies) {
  const RunConfig c = TinyConfig();
  for (const char *name : {"first_fit", "best_fit", "internal", "random"}) {
    EXPECT_EQ(MakeNamedPolicy(name, c)->name(), name);
  }
  EXPECT_THROW(MakeNamedPolicy("cvd_rl", c), MissingCheckpoint);
  EXPECT_THROW(MakeNamedPolicy("worst_fit", c), ConfigError);
}

TEST_F(ExperimentsTest, CheckpointKindMustMatchThePolicyName) {
  RunConfig c = TinyConfig();
  c.checkpoints["flat_dqn"] = TrainTiny("cvd").string();
  EXPECT_THROW(MakeNamedPolicy("flat_dqn", c), ConfigError);
  c.checkpoints["cvd_rl"] = c.checkpoints["flat_dqn"];
  EXPECT_EQ(MakeNamedPolicy("cvd_rl", c)->name(), "cvd_rl");
}

TEST_F(ExperimentsTest, EvaluationIsDeterministicAndSeeded) {
  const RunConfig c = TinyConfig();
  const auto policy = MakeNamedPolicy("random", c);
  const auto a = Evaluate(c, c.scenario, *policy, 4);
  const auto b = Evaluate(c, c.scenario, *policy, 4);
  ASSERT_EQ(a.size(), 4u);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].result, b[i].result);
    EXPECT_EQ(a[i].seed, EvaluationTraceSeed(c, static_cast<int>(i)));
    EXPECT_EQ(a[i].policy, "random");
    seeds.insert(a[i].seed);
  }
  EXPECT_EQ(seeds.size(), 4u);
}

TEST_F(ExperimentsTest, HeuristicComparisonFillsTheGrid) {
  RunConfig c = TinyConfig();
  c.workload.trace_length = 300;
  c.compare.n_seeds = 2;
  ScenarioConfig a = c.scenario;
  a.n_pms_initial = 6;
  ScenarioConfig b = a;
  b.mode = ScenarioMode::kExpansion;
  b.expansion_step = 2;
  b.n_pms_max = 10;
  c.compare.scenarios = {a, b};
  c.Resolve();
  const auto summaries = Compare(c);
  EXPECT_EQ(summaries.size(), 2u * 5u * 3u);
  for (const auto &s : summaries) EXPECT_EQ(s.scheduled_length.n, 2u);
}

TEST_F(ExperimentsTest, LearnedPolicyTransfersAcrossClusterSizes) {
  RunConfig c = TinyConfig();
  c.checkpoints["cvd_rl"] = TrainTiny("cvd").string();
  c.checkpoints["flat_dqn"] = TrainTiny("flat", AgentKind::kFlat).string();
  c.compare.policies = {"cvd_rl", "flat_dqn"};
  c.compare.warm_start_grid = {0.0};
  c.compare.n_seeds = 1;
  ScenarioConfig larger = c.scenario;
  larger.n_pms_initial = 4;
  ScenarioConfig growing = c.scenario;
  growing.mode = ScenarioMode::kExpansion;
  growing.expansion_step = 2;
  growing.n_pms_max = 6;
  c.compare.scenarios = {c.scenario, larger, growing};
  c.Resolve();
  const auto before = fs::last_write_time(c.checkpoints["cvd_rl"]);
  const auto summaries = Compare(c);
  // cvd_rl on all three; flat_dqn only at its training size.
  ASSERT_EQ(summaries.size(), 4u);
  EXPECT_EQ(summaries[1].policy, "flat_dqn");
  EXPECT_EQ(summaries[3].scenario.mode, ScenarioMode::kExpansion);
  EXPECT_EQ(fs::last_write_time(c.checkpoints["cvd_rl"]), before);
}

TEST_F(ExperimentsTest, AblationNames) {
  EXPECT_EQ(ExpandAblations({"k-sweep"}), (std::vector<std::string>{"k3", "k5", "k7", "k10"}));
  EXPECT_EQ(ExpandAblations({"full", "no-filter", "k4"}),
            (std::vector<std::string>{"full", "no-filter", "k4"}));
  EXPECT_THROW(ExpandAblations({"no-brain"}), UnknownAblation);
  EXPECT_THROW(ExpandAblations({"k"}), UnknownAblation);
  EXPECT_THROW(AblationVariantConfig(TinyConfig(), "k-sweep"), UnknownAblation);
}

TEST_F(ExperimentsTest, AblationVariantsChangeOneThing) {
  const RunConfig base = TinyConfig();
  EXPECT_FALSE(AblationVariantConfig(base, "no-filter").agent.use_filter);
  const RunConfig flat = AblationVariantConfig(base, "no-decomposition");
  EXPECT_EQ(flat.agent.kind, AgentKind::kFlat);
  EXPECT_EQ(flat.scheduler, "flat_dqn");
  EXPECT_EQ(AgentNetworkWidths(flat.agent, 2).front(), FlatInputWidth(2));
  const RunConfig pre = AblationVariantConfig(base, "no-look-ahead");
  EXPECT_EQ(AgentNetworkWidths(pre.agent, 2).front(), 9);
  EXPECT_EQ(AgentNetworkWidths(base.agent, 2).front(), 4);
  EXPECT_EQ(AblationVariantConfig(base, "bf-only").agent.EffectiveSplit(), (FilterSplit{5, 0}));
  EXPECT_EQ(AblationVariantConfig(base, "is-only").agent.EffectiveSplit(), (FilterSplit{0, 5}));
  EXPECT_EQ(AblationVariantConfig(base, "k7").agent.EffectiveSplit(), (FilterSplit{4, 3}));
}

TEST_F(ExperimentsTest, UnfilteredAgentSeesTheWholeFeasibleSet) {
  RunConfig c = AblationVariantConfig(TinyConfig(), "no-filter");
  c.scenario.n_pms_initial = 4;
  const Agent agent(c.agent, 4);
  const auto policy = agent.MakePolicy(0.1);
  Episode ep = PrepareEpisode(c.scenario, TrainingTrace(c, 1, 0));
  Rng rng(1);
  int steps = 0;
  RunEpisode(ep, *policy, rng, [&](const StepRecord &rec) {
    EXPECT_EQ(rec.decision.candidates, FeasibleActionSet(rec.state));
    ++steps;
  });
  EXPECT_GT(steps, 0);
}

TEST_F(ExperimentsTest, KSweepWritesOneLogPerFilterSize) {
  RunConfig c = TinyConfig();
  c.ablation.variants = {"k-sweep"};
  c.ablation.n_seeds = 1;
  c.scenario.n_pms_initial = 6;
  c.Resolve();
  const auto outcomes = RunAblations(c, root_);
  ASSERT_EQ(outcomes.size(), 4u);
  std::vector<int> ks;
  for (const auto &o : outcomes) {
    ks.push_back(o.filter_k);
    EXPECT_LE(o.mean_candidates, o.filter_k);
    EXPECT_TRUE(fs::exists(root_ / o.variant / "seed_0" / "train_log.csv"));
    EXPECT_TRUE(fs::exists(root_ / o.variant / "seed_0" / "manifest.json"));
  }
  EXPECT_EQ(ks, (std::vector<int>{3, 5, 7, 10}));
  EXPECT_TRUE(fs::exists(root_ / "ablation_summary.csv"));
}

}  // namespace
}  // namespace vmsched
