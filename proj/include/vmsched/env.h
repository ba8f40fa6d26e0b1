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
#include <functional>
#include <string>
#include <vector>

#include "vmsched/cluster.h"
#include "vmsched/policy.h"
#include "vmsched/rng.h"
#include "vmsched/trace.h"

namespace vmsched {

enum class RewardKind {
  kUnit,         // +1 per successful allocation
  kCpuWeighted,  // request cpu / total cluster cpu capacity
};

std::string ToString(RewardKind kind);
RewardKind ParseRewardKind(const std::string &s);

struct ExpansionEvent {
  std::int64_t t = 0;
  int n_pms = 0;  // PM count after the expansion

  friend bool operator==(const ExpansionEvent &, const ExpansionEvent &) = default;
};

struct EpisodeResult {
  std::int64_t scheduled_length = 0;
  double avg_cpu_utilization = 0.0;
  double income = 0.0;
  std::int64_t steps = 0;
  double total_reward = 0.0;
  double mean_candidates = 0.0;
  int final_pms = 0;
  bool trace_exhausted = false;
  std::vector<ExpansionEvent> expansion_events;

  friend bool operator==(const EpisodeResult &, const EpisodeResult &) = default;
};

/// One JSON object on a single line.
std::string ToJson(const EpisodeResult &result);

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

/// MDP episode over a trace. The constructor applies leading Releases and
/// presents the first Create; each Step allocates it, applies the Releases
/// that precede the next Create and presents that one. In Expansion mode an
/// unplaceable request grows the cluster before it is presented. The episode
/// ends when the trace is exhausted or a request cannot be placed.
class Episode {
 public:
  /// `state` is the (possibly warm-started) cluster and `trace` the events
  /// still to be replayed.
  Episode(ScenarioConfig scenario, ClusterState state, Trace trace,
          RewardKind reward = RewardKind::kUnit);

  bool done() const { return done_; }
  const ClusterState &state() const { return state_; }
  const ClusterSnapshot &snapshot() const { return state_.snapshot(); }
  std::int64_t now() const { return now_; }

  /// Throws InvalidAction once done, InfeasibleAllocation for an infeasible
  /// action.
  StepResult Step(Action action);

  /// Expansion mode only: adds up to expansion_step fresh PMs while below the
  /// cap. Returns false (and ends the episode) when no PM can be added. A
  /// no-op returning false if the pending request is already placeable.
  bool MaybeExpand();

  /// Accumulated metrics so far. mean_candidates is filled in by RunEpisode.
  EpisodeResult result() const;
  const std::vector<double> &utilization_samples() const { return utilization_; }

 private:
  void AdvanceToNextCreate();
  void ResolvePending();
  double IncomeOf(const VmRequest &request) const;

  ScenarioConfig scenario_;
  ClusterState state_;
  Trace trace_;
  RewardKind reward_kind_;
  std::size_t cursor_ = 0;
  std::int64_t now_ = 0;
  std::int64_t trace_end_ = 0;
  bool done_ = false;
  bool exhausted_ = false;

  std::int64_t scheduled_length_ = 0;
  double income_ = 0.0;
  double total_reward_ = 0.0;
  std::vector<double> utilization_;
  std::vector<ExpansionEvent> expansions_;
};

/// What an observer sees after each step.
struct StepRecord {
  const ClusterSnapshot &state;  // before the step
  const Decision &decision;
  StepResult outcome;
  const Episode &episode;  // after the step
};

using StepObserver = std::function<void(const StepRecord &)>;

/// Runs `policy` until the episode ends.
EpisodeResult RunEpisode(Episode &episode, const Policy &policy, Rng &rng,
                         const StepObserver &observer = {});

/// Fresh homogeneous cluster for the scenario, warm-started on the trace.
Episode PrepareEpisode(const ScenarioConfig &scenario, const Trace &trace,
                       RewardKind reward = RewardKind::kUnit);

}  // namespace vmsched
