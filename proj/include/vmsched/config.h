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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vmsched/agent.h"
#include "vmsched/env.h"
#include "vmsched/trace.h"

namespace vmsched {

/// Baked-in version, "0.1.0+<git describe>".
std::string Version();

struct WorkloadConfig {
  std::int64_t trace_length = 200;
  /// Replay this trace file instead of generating synthetic ones.
  std::optional<std::string> trace;
  std::vector<VmType> catalog = DefaultCatalog();
};

struct CompareConfig {
  std::vector<double> warm_start_grid{0.0, 0.3, 0.4, 0.5, 0.6};
  /// Evaluated scenarios; empty means the run's own scenario. The warm start
  /// ratio of each entry is replaced by the grid values.
  std::vector<ScenarioConfig> scenarios;
  std::vector<std::string> policies{"first_fit", "best_fit", "internal"};
  int n_seeds = 3;
};

struct AblationConfig {
  std::vector<std::string> variants;
  int n_seeds = 3;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ScenarioConfig scenario;
  WorkloadConfig workload;
  AgentConfig agent;
  std::string scheduler = "cvd_rl";
  RewardKind reward = RewardKind::kUnit;
  int checkpoint_every = 100;
  int workers = 0;  // parallel episode threads; 0 = episodes_per_epoch
  /// Checkpoint per learned policy name, for eval and compare.
  std::map<std::string, std::string> checkpoints;
  CompareConfig compare;
  AblationConfig ablation;

  /// Pushes the run seed into the scenario and agent. Called by the parser
  /// and after overrides.
  void Resolve();
  /// Throws ConfigError.
  void Validate() const;
};

/// Known scheduler names: first_fit, best_fit, internal, random, cvd_rl,
/// flat_dqn.
bool IsKnownPolicy(const std::string &name);
bool IsLearnedPolicy(const std::string &name);

/// Parses a config object, or the "config" member of a run manifest. Unknown
/// keys are rejected. Throws ConfigError.
RunConfig ParseRunConfig(const std::string &json_text);
RunConfig LoadRunConfig(const std::filesystem::path &path);

/// Fully resolved config as pretty-printed JSON; parses back to an equal
/// config.
std::string ToJson(const RunConfig &config);

/// Command-line overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> pms;
  std::optional<double> warm_start;
  std::optional<std::string> mode;
  std::optional<std::string> policy;
  std::optional<std::string> checkpoint;
};

void ApplyOverrides(RunConfig &config, const CliOverrides &overrides);

/// Writes <dir>/manifest.json: command, version, seed and resolved config.
void WriteManifest(const std::filesystem::path &dir, const std::string &command,
                   const RunConfig &config);

}  // namespace vmsched
