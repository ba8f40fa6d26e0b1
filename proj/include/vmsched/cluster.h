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

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vmsched {

using Resource = std::int64_t;
using VmId = std::uint64_t;

inline constexpr int kNumaPerPm = 2;

/// CPU cores and memory (GiB) of one NUMA node.
struct NumaResources {
  Resource cpu = 0;
  Resource mem = 0;

  NumaResources &operator+=(const NumaResources &o) {
    cpu += o.cpu;
    mem += o.mem;
    return *this;
  }
  NumaResources &operator-=(const NumaResources &o) {
    cpu -= o.cpu;
    mem -= o.mem;
    return *this;
  }
  friend NumaResources operator+(NumaResources a, const NumaResources &b) { return a += b; }
  friend NumaResources operator-(NumaResources a, const NumaResources &b) { return a -= b; }
  friend bool operator==(const NumaResources &, const NumaResources &) = default;

  /// True if `demand` fits into these remaining resources.
  bool Fits(const NumaResources &demand) const { return cpu >= demand.cpu && mem >= demand.mem; }
  bool NonNegative() const { return cpu >= 0 && mem >= 0; }
};

enum class VmOp : std::uint8_t { kCreate, kRelease };
enum class NumaMode : std::uint8_t { kSingle, kDouble };

std::string ToString(VmOp op);
std::string ToString(NumaMode mode);
VmOp ParseVmOp(const std::string &s);
NumaMode ParseNumaMode(const std::string &s);

struct VmRequest {
  VmId vm_id = 0;
  NumaResources resources;  // total demand
  VmOp op = VmOp::kCreate;
  NumaMode numa_mode = NumaMode::kSingle;
  std::optional<std::int64_t> duration;  // nullopt: never released
  double price_rate = 0.0;

  friend bool operator==(const VmRequest &, const VmRequest &) = default;
};

/// Throws InvalidRequest if the request violates its invariants.
void ValidateRequest(const VmRequest &request);

struct PhysicalMachine {
  int id = 0;
  std::array<NumaResources, kNumaPerPm> remaining;
  std::array<NumaResources, kNumaPerPm> capacity;

  static PhysicalMachine Fresh(int id, const NumaResources &per_numa_capacity);

  Resource RemainingCpu() const { return remaining[0].cpu + remaining[1].cpu; }
  Resource CapacityCpu() const { return capacity[0].cpu + capacity[1].cpu; }

  friend bool operator==(const PhysicalMachine &, const PhysicalMachine &) = default;
};

/// Index into the 2N-wide one-hot action vector: PM = index / 2, NUMA slot =
/// index % 2. For Double-mode requests the slot is irrelevant; the canonical
/// form uses the even index.
class Action {
 public:
  constexpr Action() = default;
  constexpr explicit Action(int index) : index_(index) {}
  static constexpr Action ForPm(int pm, int slot) { return Action(2 * pm + slot); }

  constexpr int index() const { return index_; }
  constexpr int pm() const { return index_ / 2; }
  constexpr int slot() const { return index_ % 2; }
  constexpr Action Canonical(NumaMode mode) const {
    return mode == NumaMode::kDouble ? Action(index_ & ~1) : *this;
  }

  friend constexpr auto operator<=>(const Action &, const Action &) = default;

 private:
  int index_ = 0;
};

/// Per-NUMA demand of placing `request` on `slot`: the full demand on one
/// node for Single mode, half on each node for Double mode.
std::array<NumaResources, kNumaPerPm> SplitDemand(const VmRequest &request, int slot);

bool FitsPm(const PhysicalMachine &pm, const VmRequest &request, int slot);

/// The PM after placing `request` on `slot`. Throws InfeasibleAllocation.
PhysicalMachine PlaceOnPm(const PhysicalMachine &pm, const VmRequest &request, int slot);

/// The MDP state s = (s^c, s^v) without release bookkeeping.
struct ClusterSnapshot {
  std::vector<PhysicalMachine> pms;
  VmRequest pending;

  int ActionCount() const { return 2 * static_cast<int>(pms.size()); }
  friend bool operator==(const ClusterSnapshot &, const ClusterSnapshot &) = default;
};

/// Throws InvalidAction unless 0 <= action.index() < 2N.
void CheckActionRange(const ClusterSnapshot &snapshot, Action action);

bool Feasible(const ClusterSnapshot &snapshot, Action action);

/// All feasible actions in index order; Double-mode requests yield one
/// (even) action per PM.
std::vector<Action> FeasibleActionSet(const ClusterSnapshot &snapshot);

enum class PlacementKind : std::uint8_t { kNuma0, kNuma1, kBoth };

struct Placement {
  int pm = 0;
  PlacementKind kind = PlacementKind::kNuma0;
  NumaResources demand;

  friend bool operator==(const Placement &, const Placement &) = default;
};

/// Cluster state machine: remaining resources, the pending request, and the
/// placement of every live VM so releases are deterministic.
class ClusterState {
 public:
  ClusterState() = default;
  explicit ClusterState(std::vector<PhysicalMachine> pms);
  static ClusterState Homogeneous(int n_pms, const NumaResources &per_numa_capacity);

  const ClusterSnapshot &snapshot() const { return snapshot_; }
  const std::vector<PhysicalMachine> &pms() const { return snapshot_.pms; }
  int num_pms() const { return static_cast<int>(snapshot_.pms.size()); }
  const VmRequest &pending() const { return snapshot_.pending; }
  void set_pending(const VmRequest &request) { snapshot_.pending = request; }
  const std::unordered_map<VmId, Placement> &live_placements() const { return live_; }

  /// Places the pending Create request. Only PM action.pm() changes.
  /// Throws InvalidAction or InfeasibleAllocation; state is untouched on error.
  void Allocate(Action action);

  /// Places an arbitrary Create request (used by warm start).
  void Allocate(const VmRequest &request, Action action);

  /// Returns the resources of a live VM. Throws UnknownVm.
  void Release(VmId vm_id);

  /// Appends `count` fresh PMs with the given per-NUMA capacity.
  void AddPms(int count, const NumaResources &per_numa_capacity);

  Resource AllocatedCpu() const;
  Resource CapacityCpu() const;
  /// Allocated CPU over total CPU capacity, in [0, 1].
  double CpuUtilization() const;

  friend bool operator==(const ClusterState &, const ClusterState &) = default;

 private:
  ClusterSnapshot snapshot_;
  std::unordered_map<VmId, Placement> live_;
};

/// Pure forms of the in-place operations.
ClusterState Allocate(ClusterState state, Action action);
ClusterState Release(ClusterState state, std::span<const VmRequest> releases);

}  // namespace vmsched
