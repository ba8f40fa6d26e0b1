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

#include "vmsched/heuristics.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "vmsched/errors.h"

namespace vmsched {

namespace {

void RequireNonEmpty(const std::vector<Action> &actions, const ClusterSnapshot &snapshot) {
  if (actions.empty()) {
    throw NoFeasibleAction("no feasible placement for vm " +
                           std::to_string(snapshot.pending.vm_id) + " on " +
                           std::to_string(snapshot.pms.size()) + " PMs");
  }
}

template <typename Key>
std::vector<Action> RankBy(std::vector<Action> actions, const std::vector<Key> &keys) {
  std::vector<std::size_t> order(actions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // FeasibleActionSet is index-ordered, so a stable sort breaks ties by index.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<Action> out;
  out.reserve(actions.size());
  for (std::size_t i : order) out.push_back(actions[i]);
  return out;
}

}  // namespace

Action FirstFit(const ClusterSnapshot &snapshot) {
  const auto feasible = FeasibleActionSet(snapshot);
  RequireNonEmpty(feasible, snapshot);
  return feasible.front();
}

std::vector<Action> BestFitRanking(const ClusterSnapshot &snapshot) {
  auto feasible = FeasibleActionSet(snapshot);
  std::vector<Resource> keys;
  keys.reserve(feasible.size());
  const bool is_double = snapshot.pending.numa_mode == NumaMode::kDouble;
  for (Action a : feasible) {
    const PhysicalMachine &pm = snapshot.pms[a.pm()];
    keys.push_back(is_double ? pm.RemainingCpu() : pm.remaining[a.slot()].cpu);
  }
  return RankBy(std::move(feasible), keys);
}

Action BestFit(const ClusterSnapshot &snapshot) {
  const auto ranking = BestFitRanking(snapshot);
  RequireNonEmpty(ranking, snapshot);
  return ranking.front();
}

double SurrogateScore(const PhysicalMachine &pm, const VmRequest &request, int slot,
                      const SurrogateWeights &weights) {
  const PhysicalMachine after = PlaceOnPm(pm, request, slot);
  double cpu_left = 0.0;
  double mem_left = 0.0;
  if (request.numa_mode == NumaMode::kDouble) {
    const Resource cap_cpu = after.capacity[0].cpu + after.capacity[1].cpu;
    const Resource cap_mem = after.capacity[0].mem + after.capacity[1].mem;
    cpu_left = cap_cpu > 0 ? static_cast<double>(after.RemainingCpu()) / cap_cpu : 0.0;
    mem_left = cap_mem > 0
                   ? static_cast<double>(after.remaining[0].mem + after.remaining[1].mem) / cap_mem
                   : 0.0;
  } else {
    const NumaResources &left = after.remaining[slot];
    const NumaResources &cap = after.capacity[slot];
    cpu_left = cap.cpu > 0 ? static_cast<double>(left.cpu) / cap.cpu : 0.0;
    mem_left = cap.mem > 0 ? static_cast<double>(left.mem) / cap.mem : 0.0;
  }
  const double numa_cap = static_cast<double>(std::max(after.capacity[0].cpu, after.capacity[1].cpu));
  const double imbalance =
      numa_cap > 0 ? std::abs(static_cast<double>(after.remaining[0].cpu - after.remaining[1].cpu)) / numa_cap
                   : 0.0;
  return weights.cpu * cpu_left + weights.mem * mem_left + weights.balance * imbalance;
}

std::vector<Action> InternalSurrogate(const ClusterSnapshot &snapshot,
                                      const SurrogateWeights &weights) {
  auto feasible = FeasibleActionSet(snapshot);
  RequireNonEmpty(feasible, snapshot);
  std::vector<double> keys;
  keys.reserve(feasible.size());
  for (Action a : feasible) {
    keys.push_back(SurrogateScore(snapshot.pms[a.pm()], snapshot.pending, a.slot(), weights));
  }
  return RankBy(std::move(feasible), keys);
}

FilterSplit DefaultSplit(int k) {
  switch (k) {
    case 3:
      return {2, 1};
    case 5:
      return {2, 3};
    case 7:
      return {4, 3};
    case 10:
      return {6, 4};
    default:
      return {(k + 1) / 2, k / 2};
  }
}

std::vector<Action> TopKFilter(const ClusterSnapshot &snapshot, const FilterSplit &split,
                               const SurrogateWeights &weights) {
  if (split.best_fit < 0 || split.internal < 0 || split.k() < 1) {
    throw InvalidAction("filter split must take at least one candidate");
  }
  const auto bf = BestFitRanking(snapshot);
  RequireNonEmpty(bf, snapshot);
  const auto is = InternalSurrogate(snapshot, weights);
  const std::size_t k = static_cast<std::size_t>(split.k());

  std::vector<Action> out;
  out.reserve(k);
  auto take = [&](const std::vector<Action> &ranking, std::size_t limit) {
    for (std::size_t i = 0; i < ranking.size() && i < limit && out.size() < k; ++i) {
      if (std::find(out.begin(), out.end(), ranking[i]) == out.end()) out.push_back(ranking[i]);
    }
  };
  take(bf, static_cast<std::size_t>(split.best_fit));
  take(is, static_cast<std::size_t>(split.internal));
  // Backfill when the two heads overlap.
  take(is, is.size());
  take(bf, bf.size());
  return out;
}

std::vector<Action> TopKFilter(const ClusterSnapshot &snapshot, int k,
                               const SurrogateWeights &weights) {
  if (k < 1) throw InvalidAction("top-k filter needs k >= 1");
  return TopKFilter(snapshot, DefaultSplit(k), weights);
}

}  // namespace vmsched
