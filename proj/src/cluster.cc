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

#include "vmsched/cluster.h"

#include "vmsched/errors.h"

namespace vmsched {

std::string ToString(VmOp op) { return op == VmOp::kCreate ? "create" : "release"; }

std::string ToString(NumaMode mode) { return mode == NumaMode::kSingle ? "single" : "double"; }

VmOp ParseVmOp(const std::string &s) {
  if (s == "create") return VmOp::kCreate;
  if (s == "release") return VmOp::kRelease;
  throw InvalidRequest("unknown op '" + s + "'");
}

NumaMode ParseNumaMode(const std::string &s) {
  if (s == "single") return NumaMode::kSingle;
  if (s == "double") return NumaMode::kDouble;
  throw InvalidRequest("unknown numa_mode '" + s + "'");
}

void ValidateRequest(const VmRequest &request) {
  const auto &r = request.resources;
  if (!r.NonNegative()) {
    throw InvalidRequest("vm " + std::to_string(request.vm_id) + " has negative demand");
  }
  if (request.numa_mode == NumaMode::kDouble && (r.cpu % 2 != 0 || r.mem % 2 != 0)) {
    throw InvalidRequest("double-NUMA vm " + std::to_string(request.vm_id) +
                         " must have even cpu and mem");
  }
  if (request.duration && *request.duration < 0) {
    throw InvalidRequest("vm " + std::to_string(request.vm_id) + " has negative duration");
  }
}

PhysicalMachine PhysicalMachine::Fresh(int id, const NumaResources &per_numa_capacity) {
  PhysicalMachine pm;
  pm.id = id;
  pm.remaining = {per_numa_capacity, per_numa_capacity};
  pm.capacity = {per_numa_capacity, per_numa_capacity};
  return pm;
}

std::array<NumaResources, kNumaPerPm> SplitDemand(const VmRequest &request, int slot) {
  const NumaResources &u = request.resources;
  if (request.numa_mode == NumaMode::kDouble) {
    const NumaResources half{u.cpu / 2, u.mem / 2};
    return {half, half};
  }
  if (slot == 0) return {u, NumaResources{}};
  return {NumaResources{}, u};
}

bool FitsPm(const PhysicalMachine &pm, const VmRequest &request, int slot) {
  const auto demand = SplitDemand(request, slot);
  return pm.remaining[0].Fits(demand[0]) && pm.remaining[1].Fits(demand[1]);
}

PhysicalMachine PlaceOnPm(const PhysicalMachine &pm, const VmRequest &request, int slot) {
  if (!FitsPm(pm, request, slot)) {
    throw InfeasibleAllocation("vm " + std::to_string(request.vm_id) + " does not fit on pm " +
                               std::to_string(pm.id) + " slot " + std::to_string(slot));
  }
  const auto demand = SplitDemand(request, slot);
  PhysicalMachine out = pm;
  out.remaining[0] -= demand[0];
  out.remaining[1] -= demand[1];
  return out;
}

void CheckActionRange(const ClusterSnapshot &snapshot, Action action) {
  if (action.index() < 0 || action.index() >= snapshot.ActionCount()) {
    throw InvalidAction("action " + std::to_string(action.index()) + " out of range [0, " +
                        std::to_string(snapshot.ActionCount()) + ")");
  }
}

bool Feasible(const ClusterSnapshot &snapshot, Action action) {
  CheckActionRange(snapshot, action);
  return FitsPm(snapshot.pms[action.pm()], snapshot.pending, action.slot());
}

std::vector<Action> FeasibleActionSet(const ClusterSnapshot &snapshot) {
  std::vector<Action> out;
  const bool is_double = snapshot.pending.numa_mode == NumaMode::kDouble;
  for (int i = 0; i < static_cast<int>(snapshot.pms.size()); ++i) {
    for (int slot = 0; slot < kNumaPerPm; ++slot) {
      if (FitsPm(snapshot.pms[i], snapshot.pending, slot)) out.push_back(Action::ForPm(i, slot));
      if (is_double) break;
    }
  }
  return out;
}

ClusterState::ClusterState(std::vector<PhysicalMachine> pms) { snapshot_.pms = std::move(pms); }

ClusterState ClusterState::Homogeneous(int n_pms, const NumaResources &per_numa_capacity) {
  ClusterState state;
  state.AddPms(n_pms, per_numa_capacity);
  return state;
}

void ClusterState::Allocate(Action action) { Allocate(snapshot_.pending, action); }

void ClusterState::Allocate(const VmRequest &request, Action action) {
  if (request.op != VmOp::kCreate) {
    throw InvalidAction("cannot allocate a release request (vm " +
                        std::to_string(request.vm_id) + ")");
  }
  if (action.index() < 0 || action.index() >= snapshot_.ActionCount()) {
    throw InvalidAction("action " + std::to_string(action.index()) + " out of range");
  }
  if (live_.contains(request.vm_id)) {
    throw InvalidAction("vm " + std::to_string(request.vm_id) + " is already live");
  }
  PhysicalMachine &pm = snapshot_.pms[action.pm()];
  pm = PlaceOnPm(pm, request, action.slot());
  PlacementKind kind = PlacementKind::kBoth;
  if (request.numa_mode == NumaMode::kSingle) {
    kind = action.slot() == 0 ? PlacementKind::kNuma0 : PlacementKind::kNuma1;
  }
  live_.emplace(request.vm_id, Placement{action.pm(), kind, request.resources});
}

void ClusterState::Release(VmId vm_id) {
  auto it = live_.find(vm_id);
  if (it == live_.end()) throw UnknownVm("vm " + std::to_string(vm_id) + " is not live");
  const Placement &p = it->second;
  PhysicalMachine &pm = snapshot_.pms[p.pm];
  switch (p.kind) {
    case PlacementKind::kNuma0:
      pm.remaining[0] += p.demand;
      break;
    case PlacementKind::kNuma1:
      pm.remaining[1] += p.demand;
      break;
    case PlacementKind::kBoth: {
      const NumaResources half{p.demand.cpu / 2, p.demand.mem / 2};
      pm.remaining[0] += half;
      pm.remaining[1] += half;
      break;
    }
  }
  live_.erase(it);
}

void ClusterState::AddPms(int count, const NumaResources &per_numa_capacity) {
  const int base = num_pms();
  for (int i = 0; i < count; ++i) {
    snapshot_.pms.push_back(PhysicalMachine::Fresh(base + i, per_numa_capacity));
  }
}

Resource ClusterState::AllocatedCpu() const {
  Resource allocated = 0;
  for (const auto &pm : pms()) allocated += pm.CapacityCpu() - pm.RemainingCpu();
  return allocated;
}

Resource ClusterState::CapacityCpu() const {
  Resource total = 0;
  for (const auto &pm : pms()) total += pm.CapacityCpu();
  return total;
}

double ClusterState::CpuUtilization() const {
  const Resource cap = CapacityCpu();
  if (cap == 0) return 0.0;
  return static_cast<double>(AllocatedCpu()) / static_cast<double>(cap);
}

ClusterState Allocate(ClusterState state, Action action) {
  state.Allocate(action);
  return state;
}

ClusterState Release(ClusterState state, std::span<const VmRequest> releases) {
  for (const auto &r : releases) {
    if (r.op != VmOp::kRelease) {
      throw InvalidRequest("vm " + std::to_string(r.vm_id) + " is not a release request");
    }
    state.Release(r.vm_id);
  }
  return state;
}

}  // namespace vmsched
