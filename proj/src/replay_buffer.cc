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

#include "vmsched/replay_buffer.h"

#include "vmsched/errors.h"

namespace vmsched {

namespace {

void WriteRequest(BinaryWriter &w, const VmRequest &r) {
  w.Write(r.vm_id);
  w.Write(r.resources.cpu);
  w.Write(r.resources.mem);
  w.Write(static_cast<std::uint8_t>(r.op));
  w.Write(static_cast<std::uint8_t>(r.numa_mode));
  w.Write<std::uint8_t>(r.duration.has_value());
  w.Write<std::int64_t>(r.duration.value_or(0));
  w.Write(r.price_rate);
}

VmRequest ReadRequest(BinaryReader &r) {
  VmRequest q;
  q.vm_id = r.Read<VmId>();
  q.resources.cpu = r.Read<Resource>();
  q.resources.mem = r.Read<Resource>();
  q.op = static_cast<VmOp>(r.Read<std::uint8_t>());
  q.numa_mode = static_cast<NumaMode>(r.Read<std::uint8_t>());
  const bool has_duration = r.Read<std::uint8_t>() != 0;
  const auto duration = r.Read<std::int64_t>();
  if (has_duration) q.duration = duration;
  q.price_rate = r.Read<double>();
  return q;
}

void WriteSnapshot(BinaryWriter &w, const ClusterSnapshot &s) {
  w.Write<std::uint32_t>(static_cast<std::uint32_t>(s.pms.size()));
  for (const auto &pm : s.pms) {
    w.Write<std::int32_t>(pm.id);
    for (int j = 0; j < kNumaPerPm; ++j) {
      w.Write(pm.remaining[j].cpu);
      w.Write(pm.remaining[j].mem);
      w.Write(pm.capacity[j].cpu);
      w.Write(pm.capacity[j].mem);
    }
  }
  WriteRequest(w, s.pending);
}

ClusterSnapshot ReadSnapshot(BinaryReader &r) {
  ClusterSnapshot s;
  const auto n = r.Read<std::uint32_t>();
  if (n > (1u << 20)) throw Error("corrupt snapshot in replay buffer");
  s.pms.resize(n);
  for (auto &pm : s.pms) {
    pm.id = r.Read<std::int32_t>();
    for (int j = 0; j < kNumaPerPm; ++j) {
      pm.remaining[j].cpu = r.Read<Resource>();
      pm.remaining[j].mem = r.Read<Resource>();
      pm.capacity[j].cpu = r.Read<Resource>();
      pm.capacity[j].mem = r.Read<Resource>();
    }
  }
  s.pending = ReadRequest(r);
  return s;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
}

ReplayBuffer::ReplayBuffer(ReplayBuffer &&other) noexcept
    : capacity_(other.capacity_), next_(other.next_), items_(std::move(other.items_)) {}

ReplayBuffer &ReplayBuffer::operator=(ReplayBuffer &&other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    capacity_ = other.capacity_;
    next_ = other.next_;
    items_ = std::move(other.items_);
  }
  return *this;
}

void ReplayBuffer::Add(Transition t) {
  std::lock_guard lock(mu_);
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

std::vector<Transition> ReplayBuffer::Sample(std::size_t n, Rng &rng) const {
  std::lock_guard lock(mu_);
  if (items_.empty()) throw Error("cannot sample from an empty replay buffer");
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items_[rng.UniformIndex(items_.size())]);
  return out;
}

std::vector<Transition> ReplayBuffer::Contents() const {
  std::lock_guard lock(mu_);
  std::vector<Transition> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(items_[(next_ + i) % items_.size()]);
  return out;
}

void ReplayBuffer::Write(BinaryWriter &w) const {
  std::lock_guard lock(mu_);
  w.Write<std::uint64_t>(capacity_);
  w.Write<std::uint64_t>(next_);
  w.Write<std::uint64_t>(items_.size());
  for (const auto &t : items_) {
    WriteSnapshot(w, t.state);
    w.Write<std::int32_t>(t.action.index());
    w.Write(t.reward);
    WriteSnapshot(w, t.next_state);
    w.Write<std::uint8_t>(t.done);
    w.Write<std::uint32_t>(static_cast<std::uint32_t>(t.next_candidates.size()));
    for (Action a : t.next_candidates) w.Write<std::int32_t>(a.index());
  }
}

ReplayBuffer ReplayBuffer::Read(BinaryReader &r) {
  const auto capacity = r.Read<std::uint64_t>();
  ReplayBuffer buf(capacity);
  buf.next_ = r.Read<std::uint64_t>();
  const auto n = r.Read<std::uint64_t>();
  if (n > capacity || buf.next_ >= capacity || (n < capacity && buf.next_ != 0)) {
    throw Error("corrupt replay buffer record");
  }
  buf.items_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Transition t;
    t.state = ReadSnapshot(r);
    t.action = Action(r.Read<std::int32_t>());
    t.reward = r.Read<double>();
    t.next_state = ReadSnapshot(r);
    t.done = r.Read<std::uint8_t>() != 0;
    const auto m = r.Read<std::uint32_t>();
    if (m > (1u << 22)) throw Error("corrupt replay buffer record");
    t.next_candidates.reserve(m);
    for (std::uint32_t j = 0; j < m; ++j) t.next_candidates.emplace_back(r.Read<std::int32_t>());
    buf.items_.push_back(std::move(t));
  }
  return buf;
}

}  // namespace vmsched
