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

#include "vmsched/trainer.h"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include <spdlog/spdlog.h>

#include "vmsched/errors.h"

namespace vmsched {
namespace {

constexpr const char *kCheckpointMagic = "VMSAGENT";
constexpr std::uint32_t kCheckpointVersion = 1;

// Stream tags for DeriveSeed.
constexpr std::uint64_t kTraceTag = 0x7261;
constexpr std::uint64_t kActTag = 0x6163;
constexpr std::uint64_t kTrainTag = 0x7472;
constexpr std::uint64_t kEvalTag = 0x6576;

int FlatPmCount(const RunConfig &config) { return config.scenario.n_pms_initial; }

void CheckTrainable(const RunConfig &config) {
  if (config.agent.kind == AgentKind::kFlat && config.scenario.mode == ScenarioMode::kExpansion) {
    throw ConfigError("the flat DQN baseline has a fixed action space; train it without expansion");
  }
}

struct CheckpointHeader {
  RunConfig config;
  int epoch = 0;
};

CheckpointHeader ReadHeader(BinaryReader &r) {
  r.ExpectMagic(kCheckpointMagic);
  const auto version = r.Read<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw ParseError(0, "unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointHeader h;
  h.config = ParseRunConfig(r.ReadString());
  h.epoch = r.Read<std::int32_t>();
  return h;
}

std::ifstream OpenCheckpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("checkpoint not found: " + path.string());
  return in;
}

double Mean(const std::vector<double> &v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Trace TrainingTrace(const RunConfig &config, int epoch, int episode) {
  if (config.workload.trace) return LoadTrace(*config.workload.trace);
  return GenerateTrace(config.workload.catalog, config.workload.trace_length,
                       DeriveSeed(config.seed, {kTraceTag, static_cast<std::uint64_t>(epoch),
                                                static_cast<std::uint64_t>(episode)}));
}

Trainer::Trainer(RunConfig config)
    : Trainer(config, Agent(config.agent, FlatPmCount(config)),
              ReplayBuffer(config.agent.buffer_capacity), 0) {}

Trainer::Trainer(RunConfig config, Agent agent, ReplayBuffer buffer, int epoch)
    : config_(std::move(config)), agent_(std::move(agent)), buffer_(std::move(buffer)), epoch_(epoch) {
  config_.Validate();
  CheckTrainable(config_);
  if (config_.workload.trace) fixed_trace_ = LoadTrace(*config_.workload.trace);
}

std::vector<Trace> Trainer::EpochTraces(int epoch) const {
  std::vector<Trace> traces;
  for (int i = 0; i < config_.agent.episodes_per_epoch; ++i) {
    traces.push_back(fixed_trace_ ? *fixed_trace_ : TrainingTrace(config_, epoch, i));
  }
  return traces;
}

std::vector<EpisodeResult> Trainer::RunEpisodes(
    const Policy &policy, const std::vector<Trace> &traces, std::uint64_t stream,
    std::vector<std::vector<Transition>> *transitions) const {
  const std::size_t n = traces.size();
  std::vector<EpisodeResult> results(n);
  if (transitions) transitions->assign(n, {});
  std::vector<std::exception_ptr> errors(n);

  auto run_one = [&](std::size_t i) {
    try {
      Episode episode = PrepareEpisode(config_.scenario, traces[i], config_.reward);
      Rng rng(DeriveSeed(stream, {static_cast<std::uint64_t>(i)}));
      StepObserver observer;
      if (transitions) {
        auto &out = (*transitions)[i];
        observer = [&](const StepRecord &rec) {
          Transition t;
          t.state = rec.state;
          t.action = rec.decision.action;
          t.reward = rec.outcome.reward;
          t.next_state = rec.episode.snapshot();
          t.done = rec.outcome.done;
          if (!t.done) t.next_candidates = CandidateActions(t.next_state, agent_.config());
          out.push_back(std::move(t));
        };
      }
      results[i] = RunEpisode(episode, policy, rng, observer);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(n, config_.workers > 0 ? static_cast<std::size_t>(config_.workers) : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) run_one(i);
      });
    }
    for (auto &t : pool) t.join();
  }
  for (const auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

EpochStats Trainer::RunEpoch() {
  const int epoch = epoch_ + 1;
  const auto e = static_cast<std::uint64_t>(epoch);
  const std::vector<Trace> traces = EpochTraces(epoch);

  EpochStats stats;
  std::vector<std::vector<Transition>> transitions;
  {
    const auto policy = agent_.MakePolicy(config_.agent.epsilon);
    stats.episodes = RunEpisodes(*policy, traces, DeriveSeed(config_.seed, {kActTag, e}), &transitions);
  }
  std::size_t steps = 0;
  for (auto &episode : transitions) {
    steps += episode.size();
    for (auto &t : episode) buffer_.Add(std::move(t));
  }

  Rng train_rng(DeriveSeed(config_.seed, {kTrainTag, e}));
  std::vector<double> losses;
  const std::size_t updates = steps / static_cast<std::size_t>(config_.agent.update_every);
  for (std::size_t u = 0; u < updates; ++u) {
    if (auto loss = agent_.TrainStep(buffer_, train_rng)) losses.push_back(*loss);
  }

  {
    const auto greedy = agent_.MakePolicy(0.0);
    stats.eval = RunEpisodes(*greedy, traces, DeriveSeed(config_.seed, {kEvalTag, e}), nullptr);
  }
  epoch_ = epoch;

  std::vector<double> returns, lengths, eval_lengths, candidates;
  for (const auto &r : stats.episodes) {
    returns.push_back(r.total_reward);
    lengths.push_back(static_cast<double>(r.scheduled_length));
    candidates.push_back(r.mean_candidates);
  }
  for (const auto &r : stats.eval) eval_lengths.push_back(static_cast<double>(r.scheduled_length));

  TrainingLogRow &row = stats.row;
  row.epoch = epoch;
  row.mean_return = Mean(returns);
  row.scheduled_length = Mean(lengths);
  row.eval_length = Mean(eval_lengths);
  row.loss = Mean(losses);
  row.epsilon = config_.agent.epsilon;
  row.buffer_size = buffer_.size();
  row.mean_candidates = Mean(candidates);
  row.filter_k =
      config_.agent.kind == AgentKind::kCvd && config_.agent.use_filter ? config_.agent.k : 0;
  return stats;
}

void Trainer::Run(const std::filesystem::path &out_dir) {
  std::filesystem::create_directories(out_dir / "checkpoints");
  const auto log_path = out_dir / "train_log.csv";

  // Keep the rows of epochs already completed, drop anything after them.
  std::vector<std::string> kept;
  if (epoch_ > 0 && std::filesystem::exists(log_path)) {
    for (const auto &row : LoadTrainingLog(log_path.string())) {
      if (row.epoch <= epoch_) kept.push_back(FormatTrainingLogRow(row));
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw ConfigError("cannot write " + log_path.string());
  log << TrainingLogHeader() << "\n";
  for (const auto &line : kept) log << line << "\n";
  log.flush();

  while (epoch_ < config_.agent.epochs) {
    const EpochStats stats = RunEpoch();
    log << FormatTrainingLogRow(stats.row) << "\n";
    log.flush();
    spdlog::debug("epoch {} length {:.2f} eval {:.2f} loss {:.5g}", stats.row.epoch,
                  stats.row.scheduled_length, stats.row.eval_length, stats.row.loss);
    if (epoch_ % 10 == 0 || epoch_ == config_.agent.epochs) {
      spdlog::info("epoch {}/{}: eval length {:.2f}, buffer {}", epoch_, config_.agent.epochs,
                   stats.row.eval_length, stats.row.buffer_size);
    }
    if (epoch_ % config_.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%06d.bin", epoch_);
      SaveCheckpoint(out_dir / "checkpoints" / name);
    }
  }
  SaveCheckpoint(out_dir / "checkpoint.bin");
}

void Trainer::SaveCheckpoint(const std::filesystem::path &path) const {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    BinaryWriter w(out);
    out.write(kCheckpointMagic, 8);
    w.Write<std::uint32_t>(kCheckpointVersion);
    w.WriteString(ToJson(config_));
    w.Write<std::int32_t>(epoch_);
    agent_.Write(w);
    buffer_.Write(w);
    if (!out) throw ConfigError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Trainer Trainer::Resume(const std::filesystem::path &path, std::optional<int> epochs) {
  std::ifstream in = OpenCheckpoint(path);
  BinaryReader r(in);
  CheckpointHeader h = ReadHeader(r);
  if (epochs) h.config.agent.epochs = *epochs;
  Agent agent = Agent::Read(r, h.config.agent, FlatPmCount(h.config));
  ReplayBuffer buffer = ReplayBuffer::Read(r);
  return Trainer(std::move(h.config), std::move(agent), std::move(buffer), h.epoch);
}

LoadedPolicy LoadPolicyCheckpoint(const std::filesystem::path &path, double epsilon) {
  std::ifstream in = OpenCheckpoint(path);
  BinaryReader r(in);
  CheckpointHeader h = ReadHeader(r);
  const Agent agent = Agent::Read(r, h.config.agent, FlatPmCount(h.config));
  LoadedPolicy out;
  out.policy = agent.MakePolicy(epsilon);
  out.config = std::move(h.config);
  out.epoch = h.epoch;
  return out;
}

}  // namespace vmsched
