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

#include "vmsched/env.h"

#include <algorithm>
#include <utility>

#include "json.hpp"
#include "vmsched/errors.h"

namespace vmsched {

std::string ToString(RewardKind kind) {
  return kind == RewardKind::kUnit ? "unit" : "cpu-weighted";
}

RewardKind ParseRewardKind(const std::string &s) {
  if (s == "unit") return RewardKind::kUnit;
  if (s == "cpu-weighted" || s == "cpu_weighted") return RewardKind::kCpuWeighted;
  throw ConfigError("unknown reward '" + s + "'");
}

std::string ToJson(const EpisodeResult &r) {
  nlohmann::ordered_json j;
  j["scheduled_length"] = r.scheduled_length;
  j["avg_cpu_utilization"] = r.avg_cpu_utilization;
  j["income"] = r.income;
  j["steps"] = r.steps;
  j["total_reward"] = r.total_reward;
  j["mean_candidates"] = r.mean_candidates;
  j["final_pms"] = r.final_pms;
  j["trace_exhausted"] = r.trace_exhausted;
  j["expansion_events"] = nlohmann::ordered_json::array();
  for (const auto &e : r.expansion_events) {
    j["expansion_events"].push_back({{"t", e.t}, {"n_pms", e.n_pms}});
  }
  return j.dump();
}

Episode::Episode(ScenarioConfig scenario, ClusterState state, Trace trace, RewardKind reward)
    : scenario_(std::move(scenario)),
      state_(std::move(state)),
      trace_(std::move(trace)),
      reward_kind_(reward) {
  scenario_.Validate();
  trace_end_ = trace_.events.empty() ? 0 : trace_.events.back().t;
  AdvanceToNextCreate();
  ResolvePending();
}

void Episode::AdvanceToNextCreate() {
  while (cursor_ < trace_.events.size()) {
    const TraceEvent &e = trace_.events[cursor_++];
    now_ = e.t;
    if (e.request.op == VmOp::kRelease) {
      state_.Release(e.request.vm_id);
      continue;
    }
    state_.set_pending(e.request);
    return;
  }
  done_ = true;
  exhausted_ = true;
}

void Episode::ResolvePending() {
  if (done_) return;
  while (FeasibleActionSet(state_.snapshot()).empty()) {
    if (!MaybeExpand()) return;
  }
}

bool Episode::MaybeExpand() {
  if (done_) return false;
  if (!FeasibleActionSet(state_.snapshot()).empty()) return false;
  const int n = state_.num_pms();
  if (scenario_.mode != ScenarioMode::kExpansion || n >= scenario_.n_pms_max) {
    done_ = true;
    return false;
  }
  const int added = std::min(scenario_.expansion_step, scenario_.n_pms_max - n);
  state_.AddPms(added, scenario_.pm_capacity);
  expansions_.push_back({now_, state_.num_pms()});
  return true;
}

double Episode::IncomeOf(const VmRequest &request) const {
  const auto lifetime = request.duration.value_or(std::max<std::int64_t>(trace_end_ - now_, 0));
  return static_cast<double>(lifetime) * request.price_rate;
}

StepResult Episode::Step(Action action) {
  if (done_) throw InvalidAction("episode is over");
  const VmRequest request = state_.pending();
  state_.Allocate(action);

  StepResult out;
  out.reward = reward_kind_ == RewardKind::kUnit
                   ? 1.0
                   : static_cast<double>(request.resources.cpu) /
                         static_cast<double>(state_.CapacityCpu());
  ++scheduled_length_;
  income_ += IncomeOf(request);
  total_reward_ += out.reward;

  AdvanceToNextCreate();
  utilization_.push_back(state_.CpuUtilization());
  ResolvePending();
  out.done = done_;
  return out;
}

EpisodeResult Episode::result() const {
  EpisodeResult r;
  r.scheduled_length = scheduled_length_;
  r.steps = scheduled_length_;
  r.income = income_;
  r.total_reward = total_reward_;
  if (!utilization_.empty()) {
    double sum = 0.0;
    for (double u : utilization_) sum += u;
    r.avg_cpu_utilization = sum / static_cast<double>(utilization_.size());
  }
  r.final_pms = state_.num_pms();
  r.trace_exhausted = exhausted_;
  r.expansion_events = expansions_;
  return r;
}

EpisodeResult RunEpisode(Episode &episode, const Policy &policy, Rng &rng,
                         const StepObserver &observer) {
  std::int64_t candidates = 0;
  std::int64_t decisions = 0;
  while (!episode.done()) {
    const ClusterSnapshot before = episode.snapshot();
    const Decision decision = policy.Decide(before, rng);
    const StepResult outcome = episode.Step(decision.action);
    candidates += static_cast<std::int64_t>(decision.candidates.size());
    ++decisions;
    if (observer) observer(StepRecord{before, decision, outcome, episode});
  }
  EpisodeResult r = episode.result();
  if (decisions > 0) {
    r.mean_candidates = static_cast<double>(candidates) / static_cast<double>(decisions);
  }
  return r;
}

Episode PrepareEpisode(const ScenarioConfig &scenario, const Trace &trace, RewardKind reward) {
  scenario.Validate();
  WarmStartResult ws = WarmStart(ClusterState::Homogeneous(scenario.n_pms_initial, scenario.pm_capacity),
                                 trace, scenario.warm_start_ratio);
  return Episode(scenario, std::move(ws.state), std::move(ws.remaining), reward);
}

}  // namespace vmsched
