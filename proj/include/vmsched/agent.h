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
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmsched/cluster.h"
#include "vmsched/heuristics.h"
#include "vmsched/mlp.h"
#include "vmsched/policy.h"
#include "vmsched/replay_buffer.h"
#include "vmsched/rng.h"

namespace vmsched {

/// What the shared per-PM network sees.
///  kLookAhead:      the PM after the candidate placement (4 features); a PM
///                   that is not chosen contributes its current state.
///  kPreStateAction: current PM state (4), request cpu/mem over PM capacity
///                   (2) and a one-of-three slot {numa0, numa1, both} that is
///                   all zero for a PM that is not chosen (9 features).
enum class PmEncoding { kLookAhead, kPreStateAction };

std::string ToString(PmEncoding encoding);
PmEncoding ParsePmEncoding(const std::string &s);
int EncodingWidth(PmEncoding encoding);

void EncodeIdlePm(PmEncoding encoding, const PhysicalMachine &pm, const VmRequest &request,
                  double *out);
/// Throws InfeasibleAllocation if the request does not fit on `slot`.
void EncodePlacedPm(PmEncoding encoding, const PhysicalMachine &pm, const VmRequest &request,
                    int slot, double *out);

/// Batched per-PM value: one value per input column.
using PmValueFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd &)>;

/// Wraps a scalar-output network. The network must outlive the function.
PmValueFn NetworkValueFn(const Mlp &net);

struct CandidateValue {
  Action action;
  double value = 0.0;  // sum over all PMs of the per-PM value
};

/// Cluster value of each candidate, in candidate order. Only the chosen PM's
/// term differs between candidates, so each value is computed as
/// (sum of idle PM values) - idle(chosen PM) + placed(chosen PM).
/// Throws InfeasibleAllocation for an infeasible candidate.
std::vector<CandidateValue> EvaluateCandidates(const ClusterSnapshot &snapshot,
                                               std::span<const Action> candidates,
                                               const PmValueFn &value,
                                               PmEncoding encoding = PmEncoding::kLookAhead);
std::vector<CandidateValue> EvaluateCandidates(const ClusterSnapshot &snapshot,
                                               std::span<const Action> candidates, const Mlp &net,
                                               PmEncoding encoding = PmEncoding::kLookAhead);

/// Greedy decomposed selection: every PM scores the benefit of its own
/// candidate slots over staying idle, the PM with the largest benefit wins,
/// and it takes its best slot. Ties go to the lowest action index.
/// Throws NoFeasibleAction on an empty candidate list.
Action DecomposedArgmax(const ClusterSnapshot &snapshot, std::span<const Action> candidates,
                        const PmValueFn &value, PmEncoding encoding = PmEncoding::kLookAhead);

/// Epsilon-greedy over `candidates`: uniform with probability epsilon,
/// otherwise DecomposedArgmax under `net`.
Action SelectAction(const ClusterSnapshot &snapshot, std::span<const Action> candidates,
                    const Mlp &net, double epsilon, Rng &rng,
                    PmEncoding encoding = PmEncoding::kLookAhead);

enum class AgentKind { kCvd, kFlat };

struct AgentConfig {
  double gamma = 0.75;
  double epsilon = 0.1;
  int batch_size = 2048;
  double learning_rate = 5e-4;
  double tau = 0.01;
  int epochs = 3000;
  int episodes_per_epoch = 5;
  int k = 5;
  std::optional<FilterSplit> split;  // default: DefaultSplit(k)
  std::uint64_t seed = 0;
  int hidden = 128;
  int depth = 6;
  std::size_t buffer_capacity = 100000;
  int update_every = 1;  // environment steps per gradient update
  double grad_clip = 10.0;
  AgentKind kind = AgentKind::kCvd;
  bool use_filter = true;
  PmEncoding encoding = PmEncoding::kLookAhead;
  SurrogateWeights weights;

  FilterSplit EffectiveSplit() const { return split.value_or(DefaultSplit(k)); }
  /// Throws ConfigError.
  void Validate() const;
};

/// The candidate set an agent acts over: the top-k filter output, or every
/// feasible action when the filter is disabled (and for the flat baseline).
std::vector<Action> CandidateActions(const ClusterSnapshot &snapshot, const AgentConfig &config);

/// Double-DQN targets for the decomposed value: the online network picks the
/// next action among the stored next-state candidates and the target network
/// values the resulting post-allocation cluster. Y = r at terminal states.
std::vector<double> ComputeTargets(std::span<const Transition> batch, const Mlp &online,
                                   const Mlp &target, double gamma,
                                   PmEncoding encoding = PmEncoding::kLookAhead);

/// Loss and gradient of (sum_i Qbar(post-state_i) - Y)^2 over the batch.
LossAndGradient DecomposedLoss(std::span<const Transition> batch, std::span<const double> targets,
                               const Mlp &online, PmEncoding encoding = PmEncoding::kLookAhead);

// Flat Double-DQN baseline: one network over the concatenated cluster state
// (4 features per PM) plus request features (cpu, mem, double flag), with one
// output per action index.
int FlatInputWidth(int n_pms);
void EncodeFlatState(const ClusterSnapshot &snapshot, double *out);

/// Highest-output action among `allowed`; ties by lowest index. Throws
/// NoFeasibleAction on an empty set, ShapeMismatch if the net is sized for a
/// different PM count.
Action FlatArgmax(const ClusterSnapshot &snapshot, std::span<const Action> allowed, const Mlp &net);

/// Masked argmax over the feasible set.
Action FlatDqnPolicy(const ClusterSnapshot &snapshot, const Mlp &net);

std::vector<double> ComputeFlatTargets(std::span<const Transition> batch, const Mlp &online,
                                       const Mlp &target, double gamma);

/// One Adam step on the configured loss followed by a soft target update.
/// Returns nullopt (and changes nothing) while the buffer holds fewer than
/// batch_size transitions.
std::optional<double> TrainStep(const ReplayBuffer &buffer, Mlp &online, Mlp &target, Adam &adam,
                                const AgentConfig &config, Rng &rng);

/// Acting policy over a frozen copy of the online network.
class CvdPolicy : public Policy {
 public:
  CvdPolicy(Mlp net, AgentConfig config, double epsilon);
  std::string name() const override { return "cvd_rl"; }
  Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const override;

 private:
  Mlp net_;
  AgentConfig config_;
  double epsilon_;
};

class FlatDqnActingPolicy : public Policy {
 public:
  FlatDqnActingPolicy(Mlp net, double epsilon);
  std::string name() const override { return "flat_dqn"; }
  Decision Decide(const ClusterSnapshot &snapshot, Rng &rng) const override;

 private:
  Mlp net_;
  double epsilon_;
};

/// Online and target networks plus optimizer state for one learner.
class Agent {
 public:
  Agent() = default;
  /// `n_pms` sizes the flat baseline's network; the decomposed network is
  /// independent of the PM count.
  Agent(const AgentConfig &config, int n_pms);

  const AgentConfig &config() const { return config_; }
  const Mlp &online() const { return online_; }
  const Mlp &target() const { return target_; }
  const Adam &adam() const { return adam_; }
  Mlp &mutable_online() { return online_; }

  std::optional<double> TrainStep(const ReplayBuffer &buffer, Rng &rng) {
    return vmsched::TrainStep(buffer, online_, target_, adam_, config_, rng);
  }

  std::unique_ptr<Policy> MakePolicy(double epsilon) const;

  void Write(BinaryWriter &w) const;
  /// Restores networks and optimizer; throws ShapeMismatch if they do not
  /// match the shapes implied by `config` and `n_pms`.
  static Agent Read(BinaryReader &r, const AgentConfig &config, int n_pms);

 private:
  AgentConfig config_;
  Mlp online_;
  Mlp target_;
  Adam adam_;
};

/// Network widths for a config: the shared per-PM net, or the flat net.
std::vector<int> AgentNetworkWidths(const AgentConfig &config, int n_pms);

}  // namespace vmsched
