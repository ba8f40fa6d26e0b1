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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vmsched/config.h"
#include "vmsched/policy.h"
#include "vmsched/report.h"

namespace vmsched {

/// Heuristic or checkpointed policy by name. Learned policies load
/// config.checkpoints[name] and throw MissingCheckpoint when it is absent or
/// unreadable; unknown names throw ConfigError.
std::unique_ptr<Policy> MakeNamedPolicy(const std::string &name, const RunConfig &config);

/// Trace of evaluation episode `index`: the configured trace file, or a
/// synthetic trace from a stream disjoint from the training traces.
Trace EvaluationTrace(const RunConfig &config, int index);
std::uint64_t EvaluationTraceSeed(const RunConfig &config, int index);

/// Runs `policy` on `n_episodes` evaluation traces under `scenario`.
std::vector<EvalRecord> Evaluate(const RunConfig &config, const ScenarioConfig &scenario,
                                 const Policy &policy, int n_episodes);

/// Every configured policy on every scenario and warm start ratio of the
/// comparison grid. Cells that cannot run (the flat baseline away from its
/// trained cluster size, an unreachable warm start) are skipped with a
/// warning.
std::vector<RunSummary> Compare(const RunConfig &config);

/// Expands "k-sweep" into k3, k5, k7, k10 and checks every name. Known
/// variants: full, no-filter, no-decomposition, no-look-ahead, bf-only,
/// is-only, k<n>. Throws UnknownAblation.
std::vector<std::string> ExpandAblations(const std::vector<std::string> &variants);

/// The base config with one component changed.
RunConfig AblationVariantConfig(const RunConfig &base, const std::string &variant);

struct AblationOutcome {
  std::string variant;
  std::uint64_t seed = 0;
  int filter_k = 0;
  int input_width = 0;
  double final_eval_length = 0.0;  // mean over the last 20 epochs
  double mean_candidates = 0.0;    // over the whole run
};

/// Trains every variant for ablation.n_seeds seeds under
/// <out>/<variant>/seed_<s>/ and writes <out>/ablation_summary.csv.
std::vector<AblationOutcome> RunAblations(const RunConfig &config, const std::filesystem::path &out);

}  // namespace vmsched
