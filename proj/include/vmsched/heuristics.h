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

#include <vector>

#include "vmsched/cluster.h"

namespace vmsched {

/// Lowest-index feasible action. Throws NoFeasibleAction.
Action FirstFit(const ClusterSnapshot &snapshot);

/// Feasible actions ordered by remaining CPU of the target NUMA node (Single
/// mode) or of the whole PM (Double mode), ascending; ties by lowest index.
std::vector<Action> BestFitRanking(const ClusterSnapshot &snapshot);

/// Head of BestFitRanking. Throws NoFeasibleAction.
Action BestFit(const ClusterSnapshot &snapshot);

/// Weights of the Internal-Scheduler surrogate score (lower is better):
///   cpu * (cpu left after placement) + mem * (mem left after placement)
///   + balance * |numa0 cpu - numa1 cpu| after placement,
/// each term normalized by the matching capacity. "Left" refers to the target
/// NUMA node for Single mode and the whole PM for Double mode.
struct SurrogateWeights {
  double cpu = 1.0;
  double mem = 0.5;
  double balance = 0.25;
};

double SurrogateScore(const PhysicalMachine &pm, const VmRequest &request, int slot,
                      const SurrogateWeights &weights);

/// Feasible actions ranked by SurrogateScore ascending; ties by lowest index.
/// Throws NoFeasibleAction.
std::vector<Action> InternalSurrogate(const ClusterSnapshot &snapshot,
                                      const SurrogateWeights &weights = {});

/// How many candidates the filter takes from each heuristic's ranking.
struct FilterSplit {
  int best_fit = 2;
  int internal = 3;

  int k() const { return best_fit + internal; }
  friend bool operator==(const FilterSplit &, const FilterSplit &) = default;
};

/// Default split for a candidate budget k: (2,3) for k = 5, (2,1) for 3,
/// (4,3) for 7, (6,4) for 10, otherwise (ceil(k/2), floor(k/2)).
FilterSplit DefaultSplit(int k);

/// The dynamic candidate set: the union of Best-Fit's top `split.best_fit`
/// and the surrogate's top `split.internal`, deduplicated, then backfilled
/// from the surrogate ranking (then Best-Fit's) up to split.k() actions.
/// Throws NoFeasibleAction when nothing is feasible.
std::vector<Action> TopKFilter(const ClusterSnapshot &snapshot, const FilterSplit &split,
                               const SurrogateWeights &weights = {});

/// TopKFilter with DefaultSplit(k). Requires k >= 1.
std::vector<Action> TopKFilter(const ClusterSnapshot &snapshot, int k,
                               const SurrogateWeights &weights = {});

}  // namespace vmsched
