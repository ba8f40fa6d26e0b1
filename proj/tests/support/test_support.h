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

// Shared generators and brute-force oracles for the test binaries.
#pragma once

#include <vector>

#include "vmsched/cluster.h"
#include "vmsched/mlp.h"
#include "vmsched/rng.h"

namespace vmsched::testing_support {

inline constexpr NumaResources kNuma{16, 32};

inline VmRequest MakeCreate(VmId id, Resource cpu, Resource mem,
                            NumaMode mode = NumaMode::kSingle) {
  VmRequest r;
  r.vm_id = id;
  r.resources = {cpu, mem};
  r.numa_mode = mode;
  return r;
}

// Homogeneous PMs with independent uniform remaining resources per NUMA.
inline ClusterSnapshot RandomSnapshot(Rng &rng, int n_pms, double double_share = 0.4) {
  ClusterSnapshot s;
  for (int i = 0; i < n_pms; ++i) {
    PhysicalMachine pm = PhysicalMachine::Fresh(i, kNuma);
    for (int j = 0; j < kNumaPerPm; ++j) {
      pm.remaining[j] = {static_cast<Resource>(rng.UniformIndex(kNuma.cpu + 1)),
                         static_cast<Resource>(rng.UniformIndex(kNuma.mem + 1))};
    }
    s.pms.push_back(pm);
  }
  const bool dbl = rng.Bernoulli(double_share);
  const Resource cpu = dbl ? 2 * (1 + static_cast<Resource>(rng.UniformIndex(8)))
                           : 1 + static_cast<Resource>(rng.UniformIndex(8));
  s.pending = MakeCreate(1, cpu, 2 * cpu, dbl ? NumaMode::kDouble : NumaMode::kSingle);
  return s;
}

// Draws until at least one action is feasible.
inline ClusterSnapshot RandomFeasibleSnapshot(Rng &rng, int n_pms, double double_share = 0.4) {
  for (;;) {
    ClusterSnapshot s = RandomSnapshot(rng, n_pms, double_share);
    if (!FeasibleActionSet(s).empty()) return s;
  }
}

// Post-allocation cluster built by copying every PM and placing by hand.
inline std::vector<PhysicalMachine> NaivePostState(const ClusterSnapshot &s, Action a) {
  std::vector<PhysicalMachine> pms = s.pms;
  PhysicalMachine &pm = pms[a.pm()];
  const NumaResources &d = s.pending.resources;
  if (s.pending.numa_mode == NumaMode::kDouble) {
    pm.remaining[0] -= NumaResources{d.cpu / 2, d.mem / 2};
    pm.remaining[1] -= NumaResources{d.cpu / 2, d.mem / 2};
  } else {
    pm.remaining[a.slot()] -= d;
  }
  return pms;
}

// Full sum of a per-PM value over every PM of the post-allocation cluster.
template <typename ValueFn>
double NaiveClusterValue(const ClusterSnapshot &s, Action a, ValueFn value) {
  double total = 0.0;
  for (const auto &pm : NaivePostState(s, a)) {
    const PmFeature f = PmFeatureOf(pm);
    total += value(f);
  }
  return total;
}

inline double NaiveNetworkValue(const ClusterSnapshot &s, Action a, const Mlp &net) {
  return NaiveClusterValue(s, a, [&](const PmFeature &f) { return net.ForwardScalar(f); });
}

// Remaining cpu on the NUMA (Single) or the PM (Double) that Best-Fit ranks.
inline Resource BestFitKey(const ClusterSnapshot &s, Action a) {
  const PhysicalMachine &pm = s.pms[a.pm()];
  if (s.pending.numa_mode == NumaMode::kDouble) return pm.RemainingCpu();
  return pm.remaining[a.slot()].cpu;
}

}  // namespace vmsched::testing_support
