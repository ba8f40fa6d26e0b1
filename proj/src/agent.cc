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

#include "vmsched/agent.h"

#include <algorithm>
#include <limits>
#include <utility>

#include "vmsched/errors.h"

namespace vmsched {
namespace {

constexpr int kPreStateActionWidth = 9;
constexpr std::uint64_t kInitStreamTag = 0x1417;

double RequestCpuShare(const PhysicalMachine &pm, const VmRequest &request) {
  return static_cast<double>(request.resources.cpu) / static_cast<double>(pm.CapacityCpu());
}

double RequestMemShare(const PhysicalMachine &pm, const VmRequest &request) {
  const Resource cap = pm.capacity[0].mem + pm.capacity[1].mem;
  return static_cast<double>(request.resources.mem) / static_cast<double>(cap);
}

// Per-PM values of the current state (one per PM) and of each candidate's
// post-placement PM.
struct CandidateScores {
  Eigen::VectorXd idle;
  Eigen::VectorXd placed;
};

CandidateScores ScoreCandidates(const ClusterSnapshot &snapshot,
                                std::span<const Action> candidates, const PmValueFn &value,
                                PmEncoding encoding) {
  const int width = EncodingWidth(encoding);
  const auto n = static_cast<Eigen::Index>(snapshot.pms.size());
  const auto c = static_cast<Eigen::Index>(candidates.size());
  Eigen::MatrixXd inputs(width, n + c);
  for (Eigen::Index i = 0; i < n; ++i) {
    EncodeIdlePm(encoding, snapshot.pms[i], snapshot.pending, inputs.col(i).data());
  }
  for (Eigen::Index j = 0; j < c; ++j) {
    const Action a = candidates[j];
    CheckActionRange(snapshot, a);
    EncodePlacedPm(encoding, snapshot.pms[a.pm()], snapshot.pending, a.slot(),
                   inputs.col(n + j).data());
  }
  const Eigen::VectorXd values = value(inputs);
  if (values.size() != n + c) throw ShapeMismatch("value function returned the wrong length");
  return {values.head(n), values.tail(c)};
}

// Position of the candidate with the largest benefit placed - idle; ties go
// to the lowest action index. Equivalent to picking the best PM first and
// then its best slot, since action indices are ordered by PM.
std::size_t BestByBenefit(std::span<const Action> candidates, const double *idle,
                          const double *placed) {
  std::size_t best = 0;
  double best_delta = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double delta = placed[j] - idle[candidates[j].pm()];
    if (delta > best_delta || (delta == best_delta && candidates[j] < candidates[best])) {
      best = j;
      best_delta = delta;
    }
  }
  return best;
}

void EncodePostState(PmEncoding encoding, const ClusterSnapshot &snapshot, Action action,
                     Eigen::MatrixXd &inputs, Eigen::Index first_col) {
  for (std::size_t i = 0; i < snapshot.pms.size(); ++i) {
    double *col = inputs.col(first_col + static_cast<Eigen::Index>(i)).data();
    if (static_cast<int>(i) == action.pm()) {
      EncodePlacedPm(encoding, snapshot.pms[i], snapshot.pending, action.slot(), col);
    } else {
      EncodeIdlePm(encoding, snapshot.pms[i], snapshot.pending, col);
    }
  }
}

int FlatPmCount(const Mlp &net) {
  const int n = (net.input_width() - 3) / 4;
  if (n < 1 || FlatInputWidth(n) != net.input_width() || net.output_width() != 2 * n) {
    throw ShapeMismatch("network is not a flat DQN");
  }
  return n;
}

void CheckFlatShape(const ClusterSnapshot &snapshot, const Mlp &net) {
  if (FlatPmCount(net) != static_cast<int>(snapshot.pms.size())) {
    throw ShapeMismatch("flat DQN trained for " + std::to_string(FlatPmCount(net)) +
                        " PMs, cluster has " + std::to_string(snapshot.pms.size()));
  }
}

Eigen::MatrixXd FlatInputs(std::span<const ClusterSnapshot *const> states, int width) {
  Eigen::MatrixXd inputs(width, static_cast<Eigen::Index>(states.size()));
  for (std::size_t b = 0; b < states.size(); ++b) {
    EncodeFlatState(*states[b], inputs.col(static_cast<Eigen::Index>(b)).data());
  }
  return inputs;
}

std::size_t BestOutput(std::span<const Action> allowed, const double *outputs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < allowed.size(); ++j) {
    const double v = outputs[allowed[j].index()];
    const double b = outputs[allowed[best].index()];
    if (v > b || (v == b && allowed[j] < allowed[best])) best = j;
  }
  return best;
}

}  // namespace

std::string ToString(PmEncoding encoding) {
  return encoding == PmEncoding::kLookAhead ? "look-ahead" : "pre-state-action";
}

PmEncoding ParsePmEncoding(const std::string &s) {
  if (s == "look-ahead" || s == "look_ahead" || s == "lookahead") return PmEncoding::kLookAhead;
  if (s == "pre-state-action" || s == "pre_state_action") return PmEncoding::kPreStateAction;
  throw ConfigError("unknown encoding '" + s + "'");
}

int EncodingWidth(PmEncoding encoding) {
  return encoding == PmEncoding::kLookAhead ? kPmFeatureWidth : kPreStateActionWidth;
}

void EncodeIdlePm(PmEncoding encoding, const PhysicalMachine &pm, const VmRequest &request,
                  double *out) {
  (void)request;
  const PmFeature f = PmFeatureOf(pm);
  std::copy(f.begin(), f.end(), out);
  if (encoding == PmEncoding::kPreStateAction) {
    std::fill(out + kPmFeatureWidth, out + kPreStateActionWidth, 0.0);
  }
}

void EncodePlacedPm(PmEncoding encoding, const PhysicalMachine &pm, const VmRequest &request,
                    int slot, double *out) {
  if (encoding == PmEncoding::kLookAhead) {
    const PmFeature f = PmFeatureOf(PlaceOnPm(pm, request, slot));
    std::copy(f.begin(), f.end(), out);
    return;
  }
  if (!FitsPm(pm, request, slot)) {
    throw InfeasibleAllocation("candidate does not fit on PM " + std::to_string(pm.id));
  }
  const PmFeature f = PmFeatureOf(pm);
  std::copy(f.begin(), f.end(), out);
  out[4] = RequestCpuShare(pm, request);
  out[5] = RequestMemShare(pm, request);
  out[6] = 0.0;
  out[7] = 0.0;
  out[8] = 0.0;
  out[request.numa_mode == NumaMode::kDouble ? 8 : 6 + slot] = 1.0;
}

PmValueFn NetworkValueFn(const Mlp &net) {
  if (net.output_width() != 1) throw ShapeMismatch("per-PM value network must have one output");
  return [&net](const Eigen::MatrixXd &inputs) -> Eigen::VectorXd {
    return net.Forward(inputs).row(0).transpose();
  };
}

std::vector<CandidateValue> EvaluateCandidates(const ClusterSnapshot &snapshot,
                                               std::span<const Action> candidates,
                                               const PmValueFn &value, PmEncoding encoding) {
  const CandidateScores s = ScoreCandidates(snapshot, candidates, value, encoding);
  const double idle_total = s.idle.sum();
  std::vector<CandidateValue> out;
  out.reserve(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const Action a = candidates[j];
    out.push_back({a, idle_total - s.idle[a.pm()] + s.placed[static_cast<Eigen::Index>(j)]});
  }
  return out;
}

std::vector<CandidateValue> EvaluateCandidates(const ClusterSnapshot &snapshot,
                                               std::span<const Action> candidates, const Mlp &net,
                                               PmEncoding encoding) {
  return EvaluateCandidates(snapshot, candidates, NetworkValueFn(net), encoding);
}

Action DecomposedArgmax(const ClusterSnapshot &snapshot, std::span<const Action> candidates,
                        const PmValueFn &value, PmEncoding encoding) {
  if (candidates.empty()) throw NoFeasibleAction("no candidates to choose from");
  const CandidateScores s = ScoreCandidates(snapshot, candidates, value, encoding);

  // Per PM: the best own slot and its benefit over staying idle.
  struct Best {
    Action action;
    double delta;
  };
  std::vector<std::optional<Best>> per_pm(snapshot.pms.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const Action a = candidates[j];
    const double delta = s.placed[static_cast<Eigen::Index>(j)] - s.idle[a.pm()];
    auto &slot = per_pm[a.pm()];
    if (!slot || delta > slot->delta || (delta == slot->delta && a < slot->action)) {
      slot = Best{a, delta};
    }
  }
  std::optional<Best> winner;
  for (const auto &b : per_pm) {
    if (b && (!winner || b->delta > winner->delta)) winner = b;
  }
  return winner->action;
}

Action SelectAction(const ClusterSnapshot &snapshot, std::span<const Action> candidates,
                    const Mlp &net, double epsilon, Rng &rng, PmEncoding encoding) {
  if (candidates.empty()) throw NoFeasibleAction("no candidates to choose from");
  if (epsilon > 0.0 && rng.Bernoulli(epsilon)) {
    return candidates[rng.UniformIndex(candidates.size())];
  }
  return DecomposedArgmax(snapshot, candidates, NetworkValueFn(net), encoding);
}

void AgentConfig::Validate() const {
  auto require = [](bool ok, const std::string &what) {
    if (!ok) throw ConfigError("agent: " + what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0, 1]");
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must be in [0, 1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(tau >= 0.0 && tau <= 1.0, "tau must be in [0, 1]");
  require(epochs >= 0, "epochs must be >= 0");
  require(episodes_per_epoch >= 1, "episodes_per_epoch must be >= 1");
  require(k >= 1, "k must be >= 1");
  if (split) {
    require(split->best_fit >= 0 && split->internal >= 0 && split->k() >= 1,
            "split entries must be non-negative with a positive sum");
    require(split->k() == k, "split must sum to k");
  }
  require(hidden >= 1, "hidden must be >= 1");
  require(depth >= 1, "depth must be >= 1");
  require(buffer_capacity >= 1, "buffer_capacity must be >= 1");
  require(update_every >= 1, "update_every must be >= 1");
  require(grad_clip >= 0.0, "grad_clip must be >= 0");
}

std::vector<Action> CandidateActions(const ClusterSnapshot &snapshot, const AgentConfig &config) {
  if (config.kind == AgentKind::kCvd && config.use_filter) {
    return TopKFilter(snapshot, config.EffectiveSplit(), config.weights);
  }
  auto all = FeasibleActionSet(snapshot);
  if (all.empty()) throw NoFeasibleAction("no feasible action");
  return all;
}

std::vector<double> ComputeTargets(std::span<const Transition> batch, const Mlp &online,
                                   const Mlp &target, double gamma, PmEncoding encoding) {
  const int width = EncodingWidth(encoding);
  std::vector<double> y(batch.size());
  std::vector<std::size_t> live;
  Eigen::Index online_cols = 0;
  Eigen::Index target_cols = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    y[b] = batch[b].reward;
    if (batch[b].done || batch[b].next_candidates.empty()) continue;
    live.push_back(b);
    const auto n = static_cast<Eigen::Index>(batch[b].next_state.pms.size());
    online_cols += n + static_cast<Eigen::Index>(batch[b].next_candidates.size());
    target_cols += n + 1;
  }
  if (live.empty()) return y;

  // Online network: idle values of every next-state PM plus each candidate.
  Eigen::MatrixXd inputs(width, online_cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index col = 0;
  for (std::size_t b : live) {
    const ClusterSnapshot &s = batch[b].next_state;
    offsets.push_back(col);
    for (const auto &pm : s.pms) EncodeIdlePm(encoding, pm, s.pending, inputs.col(col++).data());
    for (Action a : batch[b].next_candidates) {
      CheckActionRange(s, a);
      EncodePlacedPm(encoding, s.pms[a.pm()], s.pending, a.slot(), inputs.col(col++).data());
    }
  }
  const Eigen::RowVectorXd online_values = online.Forward(inputs).row(0);

  std::vector<Action> chosen;
  for (std::size_t i = 0; i < live.size(); ++i) {
    const Transition &t = batch[live[i]];
    const double *idle = online_values.data() + offsets[i];
    const double *placed = idle + t.next_state.pms.size();
    chosen.push_back(t.next_candidates[BestByBenefit(t.next_candidates, idle, placed)]);
  }

  // Target network: idle values plus the chosen placement.
  inputs.resize(width, target_cols);
  col = 0;
  for (std::size_t i = 0; i < live.size(); ++i) {
    const ClusterSnapshot &s = batch[live[i]].next_state;
    offsets[i] = col;
    for (const auto &pm : s.pms) EncodeIdlePm(encoding, pm, s.pending, inputs.col(col++).data());
    EncodePlacedPm(encoding, s.pms[chosen[i].pm()], s.pending, chosen[i].slot(),
                   inputs.col(col++).data());
  }
  const Eigen::RowVectorXd target_values = target.Forward(inputs).row(0);
  for (std::size_t i = 0; i < live.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(batch[live[i]].next_state.pms.size());
    const auto seg = target_values.segment(offsets[i], n);
    const double q = seg.sum() - seg[chosen[i].pm()] + target_values[offsets[i] + n];
    y[live[i]] += gamma * q;
  }
  return y;
}

LossAndGradient DecomposedLoss(std::span<const Transition> batch, std::span<const double> targets,
                               const Mlp &online, PmEncoding encoding) {
  if (targets.size() != batch.size()) throw ShapeMismatch("one target per transition required");
  Eigen::Index cols = 0;
  for (const auto &t : batch) cols += static_cast<Eigen::Index>(t.state.pms.size());
  SetRegressionBatch set;
  set.inputs.resize(EncodingWidth(encoding), cols);
  set.offsets.push_back(0);
  Eigen::Index col = 0;
  for (const auto &t : batch) {
    CheckActionRange(t.state, t.action);
    EncodePostState(encoding, t.state, t.action, set.inputs, col);
    col += static_cast<Eigen::Index>(t.state.pms.size());
    set.offsets.push_back(static_cast<std::size_t>(col));
  }
  set.targets.assign(targets.begin(), targets.end());
  return SumRegressionGradient(online, set);
}

int FlatInputWidth(int n_pms) { return kPmFeatureWidth * n_pms + 3; }

void EncodeFlatState(const ClusterSnapshot &snapshot, double *out) {
  for (const auto &pm : snapshot.pms) {
    const PmFeature f = PmFeatureOf(pm);
    out = std::copy(f.begin(), f.end(), out);
  }
  const VmRequest &r = snapshot.pending;
  if (snapshot.pms.empty()) {
    std::fill(out, out + 3, 0.0);
    return;
  }
  out[0] = RequestCpuShare(snapshot.pms.front(), r);
  out[1] = RequestMemShare(snapshot.pms.front(), r);
  out[2] = r.numa_mode == NumaMode::kDouble ? 1.0 : 0.0;
}

Action FlatArgmax(const ClusterSnapshot &snapshot, std::span<const Action> allowed,
                  const Mlp &net) {
  if (allowed.empty()) throw NoFeasibleAction("no candidates to choose from");
  CheckFlatShape(snapshot, net);
  Eigen::VectorXd input(net.input_width());
  EncodeFlatState(snapshot, input.data());
  const Eigen::MatrixXd out = net.Forward(input);
  for (Action a : allowed) CheckActionRange(snapshot, a);
  return allowed[BestOutput(allowed, out.data())];
}

Action FlatDqnPolicy(const ClusterSnapshot &snapshot, const Mlp &net) {
  const auto feasible = FeasibleActionSet(snapshot);
  if (feasible.empty()) throw NoFeasibleAction("no feasible action");
  return FlatArgmax(snapshot, feasible, net);
}

std::vector<double> ComputeFlatTargets(std::span<const Transition> batch, const Mlp &online,
                                       const Mlp &target, double gamma) {
  std::vector<double> y(batch.size());
  std::vector<std::size_t> live;
  std::vector<const ClusterSnapshot *> states;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    y[b] = batch[b].reward;
    if (batch[b].done || batch[b].next_candidates.empty()) continue;
    CheckFlatShape(batch[b].next_state, online);
    live.push_back(b);
    states.push_back(&batch[b].next_state);
  }
  if (live.empty()) return y;
  const Eigen::MatrixXd inputs = FlatInputs(states, online.input_width());
  const Eigen::MatrixXd q_online = online.Forward(inputs);
  const Eigen::MatrixXd q_target = target.Forward(inputs);
  for (std::size_t i = 0; i < live.size(); ++i) {
    const auto &cands = batch[live[i]].next_candidates;
    const auto c = static_cast<Eigen::Index>(i);
    const Action a = cands[BestOutput(cands, q_online.col(c).data())];
    y[live[i]] += gamma * q_target(a.index(), c);
  }
  return y;
}

std::optional<double> TrainStep(const ReplayBuffer &buffer, Mlp &online, Mlp &target, Adam &adam,
                                const AgentConfig &config, Rng &rng) {
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  if (buffer.size() < batch_size) return std::nullopt;
  const std::vector<Transition> batch = buffer.Sample(batch_size, rng);

  LossAndGradient lg;
  if (config.kind == AgentKind::kCvd) {
    const auto y = ComputeTargets(batch, online, target, config.gamma, config.encoding);
    lg = DecomposedLoss(batch, y, online, config.encoding);
  } else {
    const auto y = ComputeFlatTargets(batch, online, target, config.gamma);
    std::vector<const ClusterSnapshot *> states;
    std::vector<int> outputs;
    for (const auto &t : batch) {
      CheckFlatShape(t.state, online);
      states.push_back(&t.state);
      outputs.push_back(t.action.Canonical(t.state.pending.numa_mode).index());
    }
    lg = SelectedOutputGradient(online, FlatInputs(states, online.input_width()), outputs, y);
  }
  ClipGlobalNorm(lg.gradient, config.grad_clip);
  adam.Step(online, lg.gradient);
  SoftUpdate(online, target, config.tau);
  return lg.loss;
}

CvdPolicy::CvdPolicy(Mlp net, AgentConfig config, double epsilon)
    : net_(std::move(net)), config_(std::move(config)), epsilon_(epsilon) {}

Decision CvdPolicy::Decide(const ClusterSnapshot &snapshot, Rng &rng) const {
  Decision d;
  d.candidates = CandidateActions(snapshot, config_);
  d.action = SelectAction(snapshot, d.candidates, net_, epsilon_, rng, config_.encoding);
  return d;
}

FlatDqnActingPolicy::FlatDqnActingPolicy(Mlp net, double epsilon)
    : net_(std::move(net)), epsilon_(epsilon) {}

Decision FlatDqnActingPolicy::Decide(const ClusterSnapshot &snapshot, Rng &rng) const {
  Decision d;
  d.candidates = FeasibleActionSet(snapshot);
  if (d.candidates.empty()) throw NoFeasibleAction("no feasible action");
  if (epsilon_ > 0.0 && rng.Bernoulli(epsilon_)) {
    d.action = d.candidates[rng.UniformIndex(d.candidates.size())];
  } else {
    d.action = FlatArgmax(snapshot, d.candidates, net_);
  }
  return d;
}

std::vector<int> AgentNetworkWidths(const AgentConfig &config, int n_pms) {
  if (config.kind == AgentKind::kCvd) {
    return MlpWidths(EncodingWidth(config.encoding), config.hidden, 1, config.depth);
  }
  if (n_pms < 1) throw ConfigError("flat DQN needs at least one PM");
  return MlpWidths(FlatInputWidth(n_pms), config.hidden, 2 * n_pms, config.depth);
}

Agent::Agent(const AgentConfig &config, int n_pms) : config_(config) {
  config_.Validate();
  online_ = Mlp::Random(AgentNetworkWidths(config_, n_pms), DeriveSeed(config_.seed, {kInitStreamTag}));
  target_ = online_;
  adam_ = Adam(online_, AdamOptions{.learning_rate = config_.learning_rate});
}

std::unique_ptr<Policy> Agent::MakePolicy(double epsilon) const {
  if (config_.kind == AgentKind::kFlat) {
    return std::make_unique<FlatDqnActingPolicy>(online_, epsilon);
  }
  return std::make_unique<CvdPolicy>(online_, config_, epsilon);
}

void Agent::Write(BinaryWriter &w) const {
  WriteMlp(w, online_);
  WriteMlp(w, target_);
  adam_.Write(w);
}

Agent Agent::Read(BinaryReader &r, const AgentConfig &config, int n_pms) {
  Agent agent;
  agent.config_ = config;
  const auto widths = AgentNetworkWidths(config, n_pms);
  agent.online_ = ReadMlp(r, widths);
  agent.target_ = ReadMlp(r, widths);
  agent.adam_ = Adam::Read(r, agent.online_);
  return agent;
}

}  // namespace vmsched
