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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmsched/cluster.h"

namespace vmsched {

/// One catalog entry of the synthetic workload generator.
struct VmType {
  std::string name;
  NumaResources resources;
  NumaMode numa_mode = NumaMode::kSingle;
  double weight = 1.0;
  /// Mean of the exponential lifetime; nullopt means the VM is never released.
  std::optional<double> mean_duration;
  double price_rate = 0.0;

  friend bool operator==(const VmType &, const VmType &) = default;
};

/// Shapes {1, 2, 4, 8, 16} cores with mem = 2 x cpu; cpu >= 8 is Double mode.
std::vector<VmType> DefaultCatalog();

struct TraceEvent {
  std::int64_t t = 0;
  VmRequest request;

  friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
};

struct TraceMetadata {
  std::optional<std::uint64_t> seed;
  std::vector<VmType> catalog;

  friend bool operator==(const TraceMetadata &, const TraceMetadata &) = default;
};

/// Time-ordered request stream. Ties in `t` keep file (sequence) order.
struct Trace {
  std::vector<TraceEvent> events;
  TraceMetadata metadata;

  std::size_t CreateCount() const;
  friend bool operator==(const Trace &, const Trace &) = default;
};

/// Throws OrderingError if events are not time-sorted, a Release precedes its
/// Create, or a vm_id is created twice while live.
void ValidateTrace(const Trace &trace);

/// Line-oriented JSON: an optional {"meta": ...} header line, then one event
/// object per line. Throws ParseError (with line number) or OrderingError.
Trace ParseTrace(std::istream &in);
Trace LoadTrace(const std::filesystem::path &path);

void WriteTrace(const Trace &trace, std::ostream &out);
void SaveTrace(const Trace &trace, const std::filesystem::path &path);

/// `length` Creates, one per time unit, types drawn i.i.d. by catalog weight.
/// Every finite-lifetime Create gets a Release `duration` units later.
/// Deterministic in `seed`.
Trace GenerateTrace(std::span<const VmType> catalog, std::int64_t length, std::uint64_t seed);

enum class ScenarioMode { kNonExpansion, kExpansion };

std::string ToString(ScenarioMode mode);
ScenarioMode ParseScenarioMode(const std::string &s);

struct ScenarioConfig {
  int n_pms_initial = 5;
  double warm_start_ratio = 0.0;
  ScenarioMode mode = ScenarioMode::kNonExpansion;
  int expansion_step = 10;
  int n_pms_max = 110;
  NumaResources pm_capacity{16, 32};  // per NUMA node
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void Validate() const;
  std::string Describe() const;
  friend bool operator==(const ScenarioConfig &, const ScenarioConfig &) = default;
};

struct WarmStartResult {
  ClusterState state;
  Trace remaining;
};

/// Replays the trace prefix with Best-Fit placement (infeasible Creates are
/// skipped together with their Releases) until cluster CPU utilization
/// reaches `ratio`. Throws WarmStartUnreachable if the trace runs out first.
WarmStartResult WarmStart(ClusterState state, const Trace &trace, double ratio);

}  // namespace vmsched
