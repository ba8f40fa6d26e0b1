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

#include "vmsched/trace.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "json_codec.h"
#include "vmsched/errors.h"
#include "vmsched/heuristics.h"
#include "vmsched/rng.h"

namespace vmsched {

using ordered_json = nlohmann::ordered_json;

std::vector<VmType> DefaultCatalog() {
  const struct {
    Resource cpu;
    double weight;
  } shapes[] = {{1, 0.25}, {2, 0.25}, {4, 0.25}, {8, 0.15}, {16, 0.10}};
  std::vector<VmType> catalog;
  for (const auto &s : shapes) {
    VmType t;
    t.name = "c" + std::to_string(s.cpu);
    t.resources = {s.cpu, 2 * s.cpu};
    t.numa_mode = s.cpu >= 8 ? NumaMode::kDouble : NumaMode::kSingle;
    t.weight = s.weight;
    t.mean_duration = 60.0;
    t.price_rate = 0.1 * static_cast<double>(s.cpu);
    catalog.push_back(std::move(t));
  }
  return catalog;
}

std::size_t Trace::CreateCount() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto &e) {
    return e.request.op == VmOp::kCreate;
  }));
}

void ValidateTrace(const Trace &trace) {
  std::unordered_set<VmId> live;
  std::int64_t last_t = INT64_MIN;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent &e = trace.events[i];
    if (e.t < last_t) {
      throw OrderingError("event " + std::to_string(i) + " at t=" + std::to_string(e.t) +
                          " precedes t=" + std::to_string(last_t));
    }
    last_t = e.t;
    const VmId id = e.request.vm_id;
    if (e.request.op == VmOp::kCreate) {
      if (!live.insert(id).second) {
        throw OrderingError("vm " + std::to_string(id) + " created twice");
      }
    } else if (live.erase(id) == 0) {
      throw OrderingError("release of vm " + std::to_string(id) + " precedes its create");
    }
  }
}

ordered_json VmTypeToJson(const VmType &t) {
  ordered_json j;
  j["name"] = t.name;
  j["cpu"] = t.resources.cpu;
  j["mem"] = t.resources.mem;
  j["numa_mode"] = ToString(t.numa_mode);
  j["weight"] = t.weight;
  j["mean_duration"] = t.mean_duration ? ordered_json(*t.mean_duration) : ordered_json(nullptr);
  j["price_rate"] = t.price_rate;
  return j;
}

VmType VmTypeFromJson(const ordered_json &j) {
  VmType t;
  t.name = j.value("name", std::string{});
  t.resources = {j.at("cpu").get<Resource>(), j.at("mem").get<Resource>()};
  t.numa_mode = ParseNumaMode(j.value("numa_mode", std::string{"single"}));
  t.weight = j.value("weight", 1.0);
  if (j.contains("mean_duration") && !j.at("mean_duration").is_null()) {
    t.mean_duration = j.at("mean_duration").get<double>();
  }
  t.price_rate = j.value("price_rate", 0.0);
  return t;
}

namespace {

ordered_json EventToJson(const TraceEvent &e) {
  const VmRequest &r = e.request;
  ordered_json j;
  j["t"] = e.t;
  j["vm_id"] = r.vm_id;
  j["op"] = ToString(r.op);
  j["cpu"] = r.resources.cpu;
  j["mem"] = r.resources.mem;
  j["numa_mode"] = ToString(r.numa_mode);
  j["duration"] = r.duration ? ordered_json(*r.duration) : ordered_json(nullptr);
  j["price_rate"] = r.price_rate;
  return j;
}

TraceEvent EventFromJson(const ordered_json &j) {
  TraceEvent e;
  e.t = j.at("t").get<std::int64_t>();
  VmRequest &r = e.request;
  r.vm_id = j.at("vm_id").get<VmId>();
  r.op = ParseVmOp(j.at("op").get<std::string>());
  r.resources = {j.at("cpu").get<Resource>(), j.at("mem").get<Resource>()};
  r.numa_mode = ParseNumaMode(j.at("numa_mode").get<std::string>());
  if (j.contains("duration") && !j.at("duration").is_null()) {
    r.duration = j.at("duration").get<std::int64_t>();
  }
  r.price_rate = j.at("price_rate").get<double>();
  ValidateRequest(r);
  return e;
}

}  // namespace

Trace ParseTrace(std::istream &in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception &ex) {
      throw ParseError(line_no, ex.what());
    }
    try {
      if (j.contains("meta")) {
        if (!trace.events.empty()) throw ParseError(line_no, "meta header after events");
        const auto &meta = j.at("meta");
        if (meta.contains("seed") && !meta.at("seed").is_null()) {
          trace.metadata.seed = meta.at("seed").get<std::uint64_t>();
        }
        for (const auto &t : meta.value("catalog", ordered_json::array())) {
          trace.metadata.catalog.push_back(VmTypeFromJson(t));
        }
        continue;
      }
      trace.events.push_back(EventFromJson(j));
    } catch (const nlohmann::json::exception &ex) {
      throw ParseError(line_no, ex.what());
    } catch (const InvalidRequest &ex) {
      throw ParseError(line_no, ex.what());
    }
  }
  ValidateTrace(trace);
  return trace;
}

Trace LoadTrace(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path.string());
  return ParseTrace(in);
}

void WriteTrace(const Trace &trace, std::ostream &out) {
  if (trace.metadata.seed || !trace.metadata.catalog.empty()) {
    ordered_json meta;
    meta["seed"] = trace.metadata.seed ? ordered_json(*trace.metadata.seed) : ordered_json(nullptr);
    ordered_json catalog = ordered_json::array();
    for (const auto &t : trace.metadata.catalog) catalog.push_back(VmTypeToJson(t));
    meta["catalog"] = std::move(catalog);
    ordered_json header;
    header["meta"] = std::move(meta);
    out << header.dump() << '\n';
  }
  for (const auto &e : trace.events) out << EventToJson(e).dump() << '\n';
}

void SaveTrace(const Trace &trace, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace file " + path.string());
  WriteTrace(trace, out);
}

Trace GenerateTrace(std::span<const VmType> catalog, std::int64_t length, std::uint64_t seed) {
  if (catalog.empty()) throw ConfigError("VM-type catalog is empty");
  if (length <= 0) throw ConfigError("trace length must be positive");
  double total_weight = 0.0;
  for (const auto &t : catalog) {
    if (!(t.weight >= 0.0)) throw ConfigError("catalog weight must be non-negative");
    total_weight += t.weight;
  }
  if (!(total_weight > 0.0)) throw ConfigError("catalog weights sum to zero");

  Rng rng(seed);
  struct Keyed {
    TraceEvent event;
    std::uint64_t order;  // releases before creates at equal t, then vm_id
  };
  std::vector<Keyed> keyed;
  keyed.reserve(static_cast<std::size_t>(2 * length));
  for (std::int64_t i = 0; i < length; ++i) {
    double u = rng.Uniform01() * total_weight;
    std::size_t type = catalog.size() - 1;
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      if (u < catalog[c].weight) {
        type = c;
        break;
      }
      u -= catalog[c].weight;
    }
    const VmType &vt = catalog[type];
    VmRequest req;
    req.vm_id = static_cast<VmId>(i);
    req.resources = vt.resources;
    req.op = VmOp::kCreate;
    req.numa_mode = vt.numa_mode;
    req.price_rate = vt.price_rate;
    if (vt.mean_duration) {
      req.duration = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::ceil(rng.Exponential(*vt.mean_duration))));
    }
    ValidateRequest(req);
    keyed.push_back({{i, req}, 2 * static_cast<std::uint64_t>(i) + 1});
    if (req.duration) {
      VmRequest rel = req;
      rel.op = VmOp::kRelease;
      keyed.push_back({{i + *req.duration, rel}, 2 * static_cast<std::uint64_t>(i)});
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed &a, const Keyed &b) {
    if (a.event.t != b.event.t) return a.event.t < b.event.t;
    const bool ar = a.event.request.op == VmOp::kRelease;
    const bool br = b.event.request.op == VmOp::kRelease;
    if (ar != br) return ar;
    return a.order < b.order;
  });
  Trace trace;
  trace.metadata.seed = seed;
  trace.metadata.catalog.assign(catalog.begin(), catalog.end());
  trace.events.reserve(keyed.size());
  for (auto &k : keyed) trace.events.push_back(std::move(k.event));
  return trace;
}

std::string ToString(ScenarioMode mode) {
  return mode == ScenarioMode::kNonExpansion ? "non-expansion" : "expansion";
}

ScenarioMode ParseScenarioMode(const std::string &s) {
  if (s == "non-expansion" || s == "non_expansion" || s == "NonExpansion") {
    return ScenarioMode::kNonExpansion;
  }
  if (s == "expansion" || s == "Expansion") return ScenarioMode::kExpansion;
  throw ConfigError("unknown scenario mode '" + s + "'");
}

void ScenarioConfig::Validate() const {
  if (n_pms_initial < 1) throw ConfigError("n_pms_initial must be >= 1");
  if (!(warm_start_ratio >= 0.0 && warm_start_ratio < 1.0)) {
    throw ConfigError("warm_start_ratio must lie in [0, 1)");
  }
  if (pm_capacity.cpu <= 0 || pm_capacity.mem <= 0) {
    throw ConfigError("pm_capacity must be positive");
  }
  if (mode == ScenarioMode::kExpansion) {
    if (n_pms_initial > n_pms_max) throw ConfigError("n_pms_initial exceeds n_pms_max");
    if (expansion_step < 1) throw ConfigError("expansion_step must be >= 1");
  }
}

std::string ScenarioConfig::Describe() const {
  std::ostringstream os;
  os << ToString(mode) << "-N" << n_pms_initial;
  if (mode == ScenarioMode::kExpansion) os << "to" << n_pms_max << "s" << expansion_step;
  os << "-ws" << warm_start_ratio;
  return os.str();
}

WarmStartResult WarmStart(ClusterState state, const Trace &trace, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("warm start ratio must lie in [0, 1)");
  WarmStartResult result;
  result.remaining.metadata = trace.metadata;
  if (ratio == 0.0) {
    result.state = std::move(state);
    result.remaining.events = trace.events;
    return result;
  }
  std::unordered_set<VmId> skipped;
  std::size_t next = 0;
  bool reached = state.CpuUtilization() >= ratio;
  for (; next < trace.events.size() && !reached; ++next) {
    const VmRequest &req = trace.events[next].request;
    if (req.op == VmOp::kRelease) {
      if (skipped.erase(req.vm_id) == 0) state.Release(req.vm_id);
      continue;
    }
    ClusterSnapshot probe{state.pms(), req};
    const auto ranking = BestFitRanking(probe);
    if (ranking.empty()) {
      skipped.insert(req.vm_id);
      continue;
    }
    state.Allocate(req, ranking.front());
    reached = state.CpuUtilization() >= ratio;
  }
  if (!reached) {
    throw WarmStartUnreachable("trace exhausted at cpu utilization " +
                               std::to_string(state.CpuUtilization()) + " < " +
                               std::to_string(ratio));
  }
  for (; next < trace.events.size(); ++next) {
    const TraceEvent &e = trace.events[next];
    if (e.request.op == VmOp::kRelease && skipped.contains(e.request.vm_id)) continue;
    result.remaining.events.push_back(e);
  }
  result.state = std::move(state);
  return result;
}

}  // namespace vmsched
