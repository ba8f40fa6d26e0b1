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

#include <string>
#include <vector>

#include "vmsched/cluster.h"
#include "vmsched/rng.h"

namespace vmsched {

/// A scheduling decision together with the candidate set it was drawn from.
struct Decision {
  Action action;
  std::vector<Action> candidates;
};

/// Maps the pending Create of a state to a placement. Implementations are
/// immutable after construction so one instance may serve several episodes
/// concurrently; all randomness comes from the caller's Rng.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Throws NoFeasibleAction when nothing fits.
  virtual Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const = 0;
};

class FirstFitPolicy : public Policy {
 public:
  std::string name() const override { return "first_fit"; }
  Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const override;
};

class BestFitPolicy : public Policy {
 public:
  std::string name() const override { return "best_fit"; }
  Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const override;
};

class InternalSurrogatePolicy : public Policy {
 public:
  std::string name() const override { return "internal"; }
  Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const override;
};

/// Uniform over the feasible set.
class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const override;
};

}  // namespace vmsched
