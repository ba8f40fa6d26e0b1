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

// Command-line entry point: gen-trace, train, eval, compare, ablate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "vmsched/config.h"
#include "vmsched/errors.h"
#include "vmsched/experiments.h"
#include "vmsched/report.h"
#include "vmsched/trace.h"
#include "vmsched/trainer.h"

namespace fs = std::filesystem;
using namespace vmsched;

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "out";
  CliOverrides overrides;
};

void AddCommon(CLI::App *cmd, CommonArgs &args) {
  cmd->add_option("--config", args.config, "JSON config file or run manifest");
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", args.overrides.seed, "Run seed");
  cmd->add_option("--epochs", args.overrides.epochs, "Training epochs");
  cmd->add_option("--pms", args.overrides.pms, "Initial number of PMs");
  cmd->add_option("--warm-start", args.overrides.warm_start, "Warm start CPU utilization ratio");
  cmd->add_option("--mode", args.overrides.mode, "non-expansion or expansion");
  cmd->add_option("--policy", args.overrides.policy, "Scheduler name");
  cmd->add_option("--checkpoint", args.overrides.checkpoint, "Checkpoint file");
}

RunConfig Resolve(const CommonArgs &args) {
  RunConfig config = args.config.empty() ? RunConfig{} : LoadRunConfig(args.config);
  config.Resolve();
  ApplyOverrides(config, args.overrides);
  return config;
}

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("vmsched");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");
  const char *level = std::getenv("VMSCHED_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

int GenTrace(const CommonArgs &args, std::int64_t length) {
  RunConfig config = Resolve(args);
  if (length > 0) config.workload.trace_length = length;
  const fs::path out(args.out);
  WriteManifest(out, "gen-trace", config);
  const Trace trace = GenerateTrace(config.workload.catalog, config.workload.trace_length, config.seed);
  SaveTrace(trace, out / "trace.jsonl");
  spdlog::info("wrote {} events to {}", trace.events.size(), (out / "trace.jsonl").string());
  return 0;
}

int Train(const CommonArgs &args) {
  const fs::path out(args.out);
  if (args.overrides.checkpoint) {
    Trainer trainer = Trainer::Resume(*args.overrides.checkpoint, args.overrides.epochs);
    spdlog::info("resuming at epoch {} of {}", trainer.epoch(), trainer.config().agent.epochs);
    WriteManifest(out, "train", trainer.config());
    trainer.Run(out);
    return 0;
  }
  const RunConfig config = Resolve(args);
  WriteManifest(out, "train", config);
  spdlog::info("training {} on {} for {} epochs", config.scheduler, config.scenario.Describe(),
               config.agent.epochs);
  Trainer trainer(config);
  trainer.Run(out);
  return 0;
}

int Eval(const CommonArgs &args, int episodes) {
  const RunConfig config = Resolve(args);
  const fs::path out(args.out);
  WriteManifest(out, "eval", config);
  const auto policy = MakeNamedPolicy(config.scheduler, config);
  const auto records = Evaluate(config, config.scenario, *policy, episodes);
  std::ofstream csv(out / "eval.csv");
  WriteEvalCsv(csv, records);
  std::ofstream jsonl(out / "results.jsonl");
  std::vector<EpisodeResult> results;
  for (const auto &r : records) {
    jsonl << ToJson(r.result) << "\n";
    results.push_back(r.result);
  }
  const RunSummary s = Aggregate(results, config.scheduler, config.scenario);
  std::cout << config.scheduler << " on " << config.scenario.Describe()
            << ": mean scheduled length " << s.scheduled_length.mean << "\n";
  return 0;
}

int Compare(const CommonArgs &args) {
  const RunConfig config = Resolve(args);
  const fs::path out(args.out);
  WriteManifest(out, "compare", config);
  const auto summaries = vmsched::Compare(config);
  std::ofstream csv(out / "comparison.csv");
  WriteComparisonCsv(csv, summaries);
  std::ofstream json(out / "comparison.json");
  WriteComparisonJson(json, summaries);
  WriteComparisonCsv(std::cout, summaries);
  return 0;
}

int Ablate(const CommonArgs &args) {
  const RunConfig config = Resolve(args);
  const fs::path out(args.out);
  WriteManifest(out, "ablate", config);
  RunAblations(config, out);
  std::ifstream summary(out / "ablation_summary.csv");
  std::cout << summary.rdbuf();
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"vmsched: VM scheduling workbench"};
  app.set_version_flag("--version", Version());
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, compare_args, ablate_args;
  std::int64_t length = 0;
  int episodes = 10;

  auto *gen = app.add_subcommand("gen-trace", "Generate a synthetic trace");
  AddCommon(gen, gen_args);
  gen->add_option("--length", length, "Number of Create requests");
  auto *train = app.add_subcommand("train", "Train a learned scheduler");
  AddCommon(train, train_args);
  auto *eval = app.add_subcommand("eval", "Evaluate one policy");
  AddCommon(eval, eval_args);
  eval->add_option("--episodes", episodes, "Evaluation traces")->capture_default_str();
  auto *compare = app.add_subcommand("compare", "Compare policies over the warm start grid");
  AddCommon(compare, compare_args);
  auto *ablate = app.add_subcommand("ablate", "Train ablation variants");
  AddCommon(ablate, ablate_args);

  CLI11_PARSE(app, argc, argv);
  SetupLogging();

  try {
    if (*gen) return GenTrace(gen_args, length);
    if (*train) return Train(train_args);
    if (*eval) return Eval(eval_args, episodes);
    if (*compare) return Compare(compare_args);
    if (*ablate) return Ablate(ablate_args);
  } catch (const ConfigError &e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const UnknownAblation &e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const MissingCheckpoint &e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
