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

#include <fstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "vmsched/env.h"
#include "vmsched/errors.h"
#include "vmsched/trainer.h"

namespace vmsched {
namespace {

constexpr std::uint64_t kEvalTraceTag = 0x6574;
constexpr std::uint64_t kEvalActTag = 0x6561;
constexpr int kFinalWindow = 20;

LoadedPolicy LoadLearned(const std::string &name, const RunConfig &config) {
  const auto it = config.checkpoints.find(name);
  if (it == config.checkpoints.end()) {
    throw MissingCheckpoint("policy '" + name + "' needs a checkpoint (--checkpoint or config.checkpoints)");
  }
  LoadedPolicy loaded = LoadPolicyCheckpoint(it->second);
  const bool flat = loaded.config.agent.kind == AgentKind::kFlat;
  if (flat != (name == "flat_dqn")) {
    throw ConfigError("checkpoint " + it->second + " does not hold a " + name + " policy");
  }
  return loaded;
}

bool ParseKVariant(const std::string &v, int &k) {
  if (v.size() < 2 || v[0] != 'k') return false;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < '0' || v[i] > '9') return false;
  }
  k = std::stoi(v.substr(1));
  return k >= 1;
}

}  // namespace

std::unique_ptr<Policy> MakeNamedPolicy(const std::string &name, const RunConfig &config) {
  if (name == "first_fit") return std::make_unique<FirstFitPolicy>();
  if (name == "best_fit") return std::make_unique<BestFitPolicy>();
  if (name == "internal") return std::make_unique<InternalSurrogatePolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (IsLearnedPolicy(name)) return LoadLearned(name, config).policy;
  throw ConfigError("unknown policy '" + name + "'");
}

std::uint64_t EvaluationTraceSeed(const RunConfig &config, int index) {
  return DeriveSeed(config.seed, {kEvalTraceTag, static_cast<std::uint64_t>(index)});
}

Trace EvaluationTrace(const RunConfig &config, int index) {
  if (config.workload.trace) return LoadTrace(*config.workload.trace);
  return GenerateTrace(config.workload.catalog, config.workload.trace_length,
                       EvaluationTraceSeed(config, index));
}

std::vector<EvalRecord> Evaluate(const RunConfig &config, const ScenarioConfig &scenario,
                                 const Policy &policy, int n_episodes) {
  std::vector<EvalRecord> records;
  for (int i = 0; i < n_episodes; ++i) {
    Episode episode = PrepareEpisode(scenario, EvaluationTrace(config, i), config.reward);
    Rng rng(DeriveSeed(config.seed, {kEvalActTag, static_cast<std::uint64_t>(i)}));
    EvalRecord r;
    r.seed = EvaluationTraceSeed(config, i);
    r.scenario = scenario.Describe();
    r.policy = policy.name();
    r.result = RunEpisode(episode, policy, rng);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RunSummary> Compare(const RunConfig &config) {
  std::vector<ScenarioConfig> scenarios = config.compare.scenarios;
  if (scenarios.empty()) scenarios.push_back(config.scenario);

  // Load every policy once; checkpoints are only read.
  struct Named {
    std::string name;
    std::unique_ptr<Policy> policy;
    std::optional<ScenarioConfig> trained_on;  // flat baseline only
  };
  std::vector<Named> policies;
  for (const auto &name : config.compare.policies) {
    Named n{name, nullptr, std::nullopt};
    if (IsLearnedPolicy(name)) {
      LoadedPolicy loaded = LoadLearned(name, config);
      if (name == "flat_dqn") n.trained_on = loaded.config.scenario;
      n.policy = std::move(loaded.policy);
    } else {
      n.policy = MakeNamedPolicy(name, config);
    }
    policies.push_back(std::move(n));
  }

  std::vector<RunSummary> out;
  for (ScenarioConfig scenario : scenarios) {
    for (double ratio : config.compare.warm_start_grid) {
      scenario.warm_start_ratio = ratio;
      for (const auto &p : policies) {
        if (p.trained_on && (scenario.mode == ScenarioMode::kExpansion ||
                             scenario.n_pms_initial != p.trained_on->n_pms_initial)) {
          spdlog::warn("{}: skipped on {} (fixed to {} PMs)", p.name, scenario.Describe(),
                       p.trained_on->n_pms_initial);
          continue;
        }
        std::vector<EvalRecord> records;
        try {
          records = Evaluate(config, scenario, *p.policy, config.compare.n_seeds);
        } catch (const WarmStartUnreachable &e) {
          spdlog::warn("{}: skipped on {}: {}", p.name, scenario.Describe(), e.what());
          continue;
        }
        std::vector<EpisodeResult> results;
        std::vector<std::uint64_t> seeds;
        for (const auto &r : records) {
          results.push_back(r.result);
          seeds.push_back(r.seed);
        }
        out.push_back(Aggregate(results, p.name, scenario, seeds));
      }
    }
  }
  return out;
}

std::vector<std::string> ExpandAblations(const std::vector<std::string> &variants) {
  std::vector<std::string> out;
  for (const auto &v : variants) {
    int k = 0;
    if (v == "k-sweep") {
      for (const char *kv : {"k3", "k5", "k7", "k10"}) out.emplace_back(kv);
    } else if (v == "full" || v == "no-filter" || v == "no-decomposition" ||
               v == "no-look-ahead" || v == "bf-only" || v == "is-only" || ParseKVariant(v, k)) {
      out.push_back(v);
    } else {
      throw UnknownAblation("unknown ablation '" + v + "'");
    }
  }
  return out;
}

RunConfig AblationVariantConfig(const RunConfig &base, const std::string &variant) {
  RunConfig c = base;
  AgentConfig &a = c.agent;
  int k = 0;
  if (variant == "full") {
  } else if (variant == "no-filter") {
    a.use_filter = false;
  } else if (variant == "no-decomposition") {
    a.kind = AgentKind::kFlat;
  } else if (variant == "no-look-ahead") {
    a.encoding = PmEncoding::kPreStateAction;
  } else if (variant == "bf-only") {
    a.split = FilterSplit{a.k, 0};
  } else if (variant == "is-only") {
    a.split = FilterSplit{0, a.k};
  } else if (ParseKVariant(variant, k)) {
    a.k = k;
    a.split.reset();
  } else {
    throw UnknownAblation("unknown ablation '" + variant + "'");
  }
  c.scheduler = a.kind == AgentKind::kFlat ? "flat_dqn" : "cvd_rl";
  c.Validate();
  return c;
}

std::vector<AblationOutcome> RunAblations(const RunConfig &config, const std::filesystem::path &out) {
  const auto variants = ExpandAblations(config.ablation.variants);
  if (variants.empty()) throw UnknownAblation("no ablation variants configured");
  std::vector<AblationOutcome> outcomes;
  for (const auto &variant : variants) {
    for (int s = 0; s < config.ablation.n_seeds; ++s) {
      RunConfig c = AblationVariantConfig(config, variant);
      c.seed = config.seed + static_cast<std::uint64_t>(s);
      c.Resolve();
      const auto dir = out / variant / ("seed_" + std::to_string(s));
      WriteManifest(dir, "train", c);
      spdlog::info("ablation {} seed {}", variant, c.seed);
      Trainer trainer(c);
      trainer.Run(dir);
      const auto rows = LoadTrainingLog((dir / "train_log.csv").string());

      AblationOutcome o;
      o.variant = variant;
      o.seed = c.seed;
      o.filter_k = rows.empty() ? 0 : rows.back().filter_k;
      o.input_width = trainer.agent().online().input_width();
      if (!rows.empty()) {
        o.final_eval_length = FinalMean(rows, kFinalWindow);
        double sum = 0.0;
        for (const auto &r : rows) sum += r.mean_candidates;
        o.mean_candidates = sum / static_cast<double>(rows.size());
      }
      outcomes.push_back(o);
    }
  }
  std::ofstream csv(out / "ablation_summary.csv");
  csv << "variant,seed,filter_k,input_width,final_eval_length,mean_candidates\n";
  for (const auto &o : outcomes) {
    csv << fmt::format("{},{},{},{},{:.4f},{:.4f}\n", o.variant, o.seed, o.filter_k, o.input_width,
                       o.final_eval_length, o.mean_candidates);
  }
  return outcomes;
}

}  // namespace vmsched
