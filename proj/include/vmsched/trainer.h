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

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "vmsched/agent.h"
#include "vmsched/config.h"
#include "vmsched/env.h"
#include "vmsched/replay_buffer.h"
#include "vmsched/report.h"
#include "vmsched/trace.h"

namespace vmsched {

/// Trace for one training episode: the configured trace file, or a synthetic
/// trace seeded by (run seed, epoch, episode).
Trace TrainingTrace(const RunConfig &config, int epoch, int episode);

struct EpochStats {
  TrainingLogRow row;
  std::vector<EpisodeResult> episodes;  // epsilon-greedy training episodes
  std::vector<EpisodeResult> eval;      // greedy replay of the same traces
};

/// Learner loop. Each epoch collects episodes_per_epoch episodes in parallel
/// against a frozen copy of the online network, appends their transitions to
/// the buffer in episode order, then runs one gradient step per update_every
/// collected steps and finally replays the epoch's traces greedily. All
/// randomness derives from the run seed, so a run is a pure function of its
/// config regardless of the worker count.
class Trainer {
 public:
  explicit Trainer(RunConfig config);

  const RunConfig &config() const { return config_; }
  int epoch() const { return epoch_; }
  const Agent &agent() const { return agent_; }
  const ReplayBuffer &buffer() const { return buffer_; }

  EpochStats RunEpoch();

  /// Trains up to config().agent.epochs, appending rows to
  /// <out>/train_log.csv and checkpointing to <out>/checkpoints every
  /// checkpoint_every epochs and at the end (<out>/checkpoint.bin). When the
  /// trainer was resumed, an existing log is truncated to the completed
  /// epochs before appending.
  void Run(const std::filesystem::path &out_dir);

  void SaveCheckpoint(const std::filesystem::path &path) const;

  /// Restores the full training state. `epochs`, when set, replaces the
  /// stored epoch budget. Throws MissingCheckpoint.
  static Trainer Resume(const std::filesystem::path &path, std::optional<int> epochs = {});

 private:
  Trainer(RunConfig config, Agent agent, ReplayBuffer buffer, int epoch);

  std::vector<EpisodeResult> RunEpisodes(const Policy &policy, const std::vector<Trace> &traces,
                                         std::uint64_t stream,
                                         std::vector<std::vector<Transition>> *transitions) const;

  std::vector<Trace> EpochTraces(int epoch) const;

  RunConfig config_;
  std::optional<Trace> fixed_trace_;  // loaded once when a trace file is set
  Agent agent_;
  ReplayBuffer buffer_;
  int epoch_ = 0;
};

/// The learned policy stored in a checkpoint (networks only), greedy unless
/// epsilon > 0. Throws MissingCheckpoint.
struct LoadedPolicy {
  RunConfig config;  // the training config
  int epoch = 0;
  std::unique_ptr<Policy> policy;
};
LoadedPolicy LoadPolicyCheckpoint(const std::filesystem::path &path, double epsilon = 0.0);

}  // namespace vmsched
