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

#include "vmsched/policy.h"

#include "vmsched/errors.h"
#include "vmsched/heuristics.h"

namespace vmsched {

Decision FirstFitPolicy::Decide(const ClusterSnapshot &snapshot, Rng &) const {
  return {FirstFit(snapshot), {}};
}

Decision BestFitPolicy::Decide(const ClusterSnapshot &snapshot, Rng &) const {
  return {BestFit(snapshot), {}};
}

Decision InternalSurrogatePolicy::Decide(const ClusterSnapshot &snapshot, Rng &) const {
  return {InternalSurrogate(snapshot).front(), {}};
}

Decision RandomPolicy::Decide(const ClusterSnapshot &snapshot, Rng &rng) const {
  auto feasible = FeasibleActionSet(snapshot);
  if (feasible.empty()) throw NoFeasibleAction("random policy: nothing fits");
  const Action a = feasible[rng.UniformIndex(feasible.size())];
  return {a, std::move(feasible)};
}

}  // namespace vmsched
