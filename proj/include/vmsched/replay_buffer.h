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

#include <cstddef>
#include <mutex>
#include <vector>

#include "vmsched/binary_io.h"
#include "vmsched/cluster.h"
#include "vmsched/rng.h"

namespace vmsched {

/// (s(t), a(t), r(t), s(t+1)) plus what is needed to recompute the
/// next-state policy: the candidate set the acting policy used at s(t+1).
struct Transition {
  ClusterSnapshot state;
  Action action;
  double reward = 0.0;
  ClusterSnapshot next_state;
  bool done = false;
  std::vector<Action> next_candidates;

  friend bool operator==(const Transition &, const Transition &) = default;
};

/// Fixed-capacity ring buffer with uniform sampling. Append and Sample may
/// be called from different threads.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);
  ReplayBuffer(ReplayBuffer &&other) noexcept;
  ReplayBuffer &operator=(ReplayBuffer &&other) noexcept;

  void Add(Transition t);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

  /// `n` transitions drawn uniformly with replacement. Requires size() > 0.
  std::vector<Transition> Sample(std::size_t n, Rng &rng) const;

  /// Contents from oldest to newest.
  std::vector<Transition> Contents() const;

  void Write(BinaryWriter &w) const;
  static ReplayBuffer Read(BinaryReader &r);

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // slot overwritten by the next Add once full
  std::vector<Transition> items_;
  mutable std::mutex mu_;
};

}  // namespace vmsched
