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

#include "vmsched/config.h"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "json_codec.h"
#include "vmsched/errors.h"

#ifndef VMSCHED_VERSION
#define VMSCHED_VERSION "0.1.0+unknown"
#endif

namespace vmsched {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char *kPolicies[] = {"first_fit", "best_fit", "internal",
                                     "random",    "cvd_rl",   "flat_dqn"};

void CheckKeys(const ordered_json &j, std::initializer_list<const char *> allowed,
               const std::string &context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto &item : j.items()) {
    bool known = false;
    for (const char *k : allowed) known = known || item.key() == k;
    if (!known) throw ConfigError(context + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void Get(const ordered_json &j, const char *key, T &out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ordered_json ScenarioToJson(const ScenarioConfig &s) {
  ordered_json j;
  j["n_pms_initial"] = s.n_pms_initial;
  j["warm_start_ratio"] = s.warm_start_ratio;
  j["mode"] = ToString(s.mode);
  j["expansion_step"] = s.expansion_step;
  j["n_pms_max"] = s.n_pms_max;
  j["pm_capacity"] = {{"cpu", s.pm_capacity.cpu}, {"mem", s.pm_capacity.mem}};
  return j;
}

ScenarioConfig ScenarioFromJson(const ordered_json &j, ScenarioConfig s, const std::string &ctx) {
  CheckKeys(j, {"n_pms_initial", "warm_start_ratio", "mode", "expansion_step", "n_pms_max",
                "pm_capacity"},
            ctx);
  Get(j, "n_pms_initial", s.n_pms_initial);
  Get(j, "warm_start_ratio", s.warm_start_ratio);
  if (j.contains("mode")) s.mode = ParseScenarioMode(j.at("mode").get<std::string>());
  Get(j, "expansion_step", s.expansion_step);
  Get(j, "n_pms_max", s.n_pms_max);
  if (j.contains("pm_capacity")) {
    const auto &c = j.at("pm_capacity");
    CheckKeys(c, {"cpu", "mem"}, ctx + ".pm_capacity");
    Get(c, "cpu", s.pm_capacity.cpu);
    Get(c, "mem", s.pm_capacity.mem);
  }
  return s;
}

ordered_json AgentToJson(const AgentConfig &a) {
  ordered_json j;
  j["kind"] = a.kind == AgentKind::kCvd ? "cvd" : "flat";
  j["gamma"] = a.gamma;
  j["epsilon"] = a.epsilon;
  j["batch_size"] = a.batch_size;
  j["learning_rate"] = a.learning_rate;
  j["tau"] = a.tau;
  j["epochs"] = a.epochs;
  j["episodes_per_epoch"] = a.episodes_per_epoch;
  j["k"] = a.k;
  j["hidden"] = a.hidden;
  j["depth"] = a.depth;
  j["buffer_capacity"] = a.buffer_capacity;
  j["update_every"] = a.update_every;
  j["grad_clip"] = a.grad_clip;
  j["use_filter"] = a.use_filter;
  j["encoding"] = ToString(a.encoding);
  return j;
}

void AgentFromJson(const ordered_json &j, AgentConfig &a) {
  CheckKeys(j, {"kind", "gamma", "epsilon", "batch_size", "learning_rate", "tau", "epochs",
                "episodes_per_epoch", "k", "hidden", "depth", "buffer_capacity", "update_every",
                "grad_clip", "use_filter", "encoding"},
            "agent");
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "cvd") {
      a.kind = AgentKind::kCvd;
    } else if (kind == "flat") {
      a.kind = AgentKind::kFlat;
    } else {
      throw ConfigError("agent.kind must be 'cvd' or 'flat'");
    }
  }
  Get(j, "gamma", a.gamma);
  Get(j, "epsilon", a.epsilon);
  Get(j, "batch_size", a.batch_size);
  Get(j, "learning_rate", a.learning_rate);
  Get(j, "tau", a.tau);
  Get(j, "epochs", a.epochs);
  Get(j, "episodes_per_epoch", a.episodes_per_epoch);
  Get(j, "k", a.k);
  Get(j, "hidden", a.hidden);
  Get(j, "depth", a.depth);
  Get(j, "buffer_capacity", a.buffer_capacity);
  Get(j, "update_every", a.update_every);
  Get(j, "grad_clip", a.grad_clip);
  Get(j, "use_filter", a.use_filter);
  if (j.contains("encoding")) a.encoding = ParsePmEncoding(j.at("encoding").get<std::string>());
}

RunConfig FromJson(const ordered_json &root) {
  CheckKeys(root, {"seed", "scenario", "workload", "agent", "filter", "scheduler", "reward",
                   "checkpoint_every", "workers", "checkpoints", "compare", "ablation"},
            "config");
  RunConfig c;
  Get(root, "seed", c.seed);
  if (root.contains("scenario")) c.scenario = ScenarioFromJson(root.at("scenario"), c.scenario, "scenario");
  if (root.contains("workload")) {
    const auto &w = root.at("workload");
    CheckKeys(w, {"trace_length", "trace", "catalog"}, "workload");
    Get(w, "trace_length", c.workload.trace_length);
    if (w.contains("trace") && !w.at("trace").is_null()) c.workload.trace = w.at("trace").get<std::string>();
    if (w.contains("catalog")) {
      c.workload.catalog.clear();
      for (const auto &t : w.at("catalog")) c.workload.catalog.push_back(VmTypeFromJson(t));
    }
  }
  if (root.contains("agent")) AgentFromJson(root.at("agent"), c.agent);
  if (root.contains("filter")) {
    const auto &f = root.at("filter");
    CheckKeys(f, {"split", "weights"}, "filter");
    if (f.contains("split") && !f.at("split").is_null()) {
      const auto split = f.at("split").get<std::vector<int>>();
      if (split.size() != 2) throw ConfigError("filter.split must be [best_fit, internal]");
      c.agent.split = FilterSplit{split[0], split[1]};
      if (!root.contains("agent") || !root.at("agent").contains("k")) c.agent.k = c.agent.split->k();
    }
    if (f.contains("weights")) {
      const auto &w = f.at("weights");
      CheckKeys(w, {"cpu", "mem", "balance"}, "filter.weights");
      Get(w, "cpu", c.agent.weights.cpu);
      Get(w, "mem", c.agent.weights.mem);
      Get(w, "balance", c.agent.weights.balance);
    }
  }
  Get(root, "scheduler", c.scheduler);
  if (root.contains("reward")) c.reward = ParseRewardKind(root.at("reward").get<std::string>());
  Get(root, "checkpoint_every", c.checkpoint_every);
  Get(root, "workers", c.workers);
  if (root.contains("checkpoints")) {
    c.checkpoints = root.at("checkpoints").get<std::map<std::string, std::string>>();
  }
  if (root.contains("compare")) {
    const auto &cmp = root.at("compare");
    CheckKeys(cmp, {"warm_start_grid", "scenarios", "policies", "n_seeds"}, "compare");
    Get(cmp, "warm_start_grid", c.compare.warm_start_grid);
    Get(cmp, "policies", c.compare.policies);
    Get(cmp, "n_seeds", c.compare.n_seeds);
    if (cmp.contains("scenarios")) {
      for (const auto &s : cmp.at("scenarios")) {
        c.compare.scenarios.push_back(ScenarioFromJson(s, c.scenario, "compare.scenarios"));
      }
    }
  }
  if (root.contains("ablation")) {
    const auto &ab = root.at("ablation");
    CheckKeys(ab, {"variants", "n_seeds"}, "ablation");
    Get(ab, "variants", c.ablation.variants);
    Get(ab, "n_seeds", c.ablation.n_seeds);
  }
  c.Resolve();
  c.Validate();
  return c;
}

}  // namespace

std::string Version() { return VMSCHED_VERSION; }

void RunConfig::Resolve() {
  scenario.seed = seed;
  agent.seed = seed;
  for (auto &s : compare.scenarios) s.seed = seed;
}

void RunConfig::Validate() const {
  scenario.Validate();
  agent.Validate();
  for (const auto &s : compare.scenarios) s.Validate();
  if (workload.trace_length < 1) throw ConfigError("workload.trace_length must be >= 1");
  if (workload.catalog.empty()) throw ConfigError("workload.catalog is empty");
  if (!IsKnownPolicy(scheduler)) throw ConfigError("unknown scheduler '" + scheduler + "'");
  for (const auto &p : compare.policies) {
    if (!IsKnownPolicy(p)) throw ConfigError("unknown policy '" + p + "' in compare.policies");
  }
  for (const auto &[name, path] : checkpoints) {
    if (!IsLearnedPolicy(name)) throw ConfigError("checkpoint given for non-learned policy '" + name + "'");
  }
  for (double r : compare.warm_start_grid) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("warm start grid values must lie in [0, 1)");
  }
  if (compare.n_seeds < 1) throw ConfigError("compare.n_seeds must be >= 1");
  if (ablation.n_seeds < 1) throw ConfigError("ablation.n_seeds must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

bool IsKnownPolicy(const std::string &name) {
  for (const char *p : kPolicies) {
    if (name == p) return true;
  }
  return false;
}

bool IsLearnedPolicy(const std::string &name) { return name == "cvd_rl" || name == "flat_dqn"; }

RunConfig ParseRunConfig(const std::string &json_text) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (root.is_object() && root.contains("config") && root.contains("version")) {
    root = root.at("config");
  }
  try {
    return FromJson(root);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig LoadRunConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

std::string ToJson(const RunConfig &c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["scenario"] = ScenarioToJson(c.scenario);
  ordered_json w;
  w["trace_length"] = c.workload.trace_length;
  w["trace"] = c.workload.trace ? ordered_json(*c.workload.trace) : ordered_json(nullptr);
  w["catalog"] = ordered_json::array();
  for (const auto &t : c.workload.catalog) w["catalog"].push_back(VmTypeToJson(t));
  j["workload"] = std::move(w);
  j["agent"] = AgentToJson(c.agent);
  const FilterSplit split = c.agent.EffectiveSplit();
  j["filter"] = {{"split", {split.best_fit, split.internal}},
                 {"weights",
                  {{"cpu", c.agent.weights.cpu},
                   {"mem", c.agent.weights.mem},
                   {"balance", c.agent.weights.balance}}}};
  j["scheduler"] = c.scheduler;
  j["reward"] = ToString(c.reward);
  j["checkpoint_every"] = c.checkpoint_every;
  j["workers"] = c.workers;
  j["checkpoints"] = c.checkpoints;
  ordered_json cmp;
  cmp["warm_start_grid"] = c.compare.warm_start_grid;
  cmp["scenarios"] = ordered_json::array();
  for (const auto &s : c.compare.scenarios) cmp["scenarios"].push_back(ScenarioToJson(s));
  cmp["policies"] = c.compare.policies;
  cmp["n_seeds"] = c.compare.n_seeds;
  j["compare"] = std::move(cmp);
  j["ablation"] = {{"variants", c.ablation.variants}, {"n_seeds", c.ablation.n_seeds}};
  return j.dump(2);
}

void ApplyOverrides(RunConfig &c, const CliOverrides &o) {
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.agent.epochs = *o.epochs;
  if (o.pms) c.scenario.n_pms_initial = *o.pms;
  if (o.warm_start) c.scenario.warm_start_ratio = *o.warm_start;
  if (o.mode) c.scenario.mode = ParseScenarioMode(*o.mode);
  if (o.policy) {
    if (!IsKnownPolicy(*o.policy)) throw ConfigError("unknown policy '" + *o.policy + "'");
    c.scheduler = *o.policy;
  }
  if (o.checkpoint) {
    c.checkpoints[IsLearnedPolicy(c.scheduler) ? c.scheduler : "cvd_rl"] = *o.checkpoint;
  }
  c.Resolve();
  c.Validate();
}

void WriteManifest(const std::filesystem::path &dir, const std::string &command,
                   const RunConfig &config) {
  std::filesystem::create_directories(dir);
  ordered_json m;
  m["command"] = command;
  m["version"] = Version();
  m["seed"] = config.seed;
  m["config"] = ordered_json::parse(ToJson(config));
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << "\n";
  if (!out) throw ConfigError("cannot write manifest to " + dir.string());
}

}  // namespace vmsched
