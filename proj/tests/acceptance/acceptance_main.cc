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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "support/test_support.h"
#include "vmsched/agent.h"
#include "vmsched/cluster.h"
#include "vmsched/config.h"
#include "vmsched/env.h"
#include "vmsched/errors.h"
#include "vmsched/experiments.h"
#include "vmsched/heuristics.h"
#include "vmsched/mlp.h"
#include "vmsched/report.h"
#include "vmsched/trainer.h"

#ifndef VMSCHED_CLI_PATH
#error "VMSCHED_CLI_PATH must point at the vmsched executable"
#endif

namespace vmsched {
namespace {

namespace fs = std::filesystem;
using testing_support::RandomFeasibleSnapshot;
using testing_support::RandomSnapshot;

// Pinned thresholds.
constexpr int kDynamicsTriples = 10000;
constexpr double kDynamicsSeconds = 10.0;
constexpr int kRealizabilityStates = 1000;
constexpr double kRealizabilitySeconds = 5.0;
constexpr int kGradientNets = 20;
constexpr double kGradientRelError = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr int kFilterK = 5;
constexpr double kDecompositionTolerance = 1e-9;
constexpr int kDecompositionStates = 1000;
constexpr int kLearningEpochs = 300;
constexpr int kFinalWindow = 20;
constexpr double kBestFitRatio = 0.98;
constexpr std::uint64_t kLearningSeeds[] = {1, 2, 3};
constexpr int kTransferTraces = 10;
constexpr int kTransferWins = 8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

NumaResources Total(const ClusterState &s) {
  NumaResources t;
  for (const auto &pm : s.pms()) t += pm.remaining[0] + pm.remaining[1];
  return t;
}

bool OracleFeasible(const PhysicalMachine &pm, const VmRequest &r, int slot) {
  if (r.numa_mode == NumaMode::kDouble) {
    const NumaResources half{r.resources.cpu / 2, r.resources.mem / 2};
    return pm.remaining[0].Fits(half) && pm.remaining[1].Fits(half);
  }
  return pm.remaining[slot].Fits(r.resources);
}

// ---------------------------------------------------------------------------
// 1. Dynamics.

Outcome DynamicsOracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  int violations = 0;
  int feasible = 0;
  ClusterState state = ClusterState::Homogeneous(6, testing_support::kNuma);
  std::vector<VmId> live;
  VmId next_id = 1;
  for (int i = 0; i < kDynamicsTriples; ++i) {
    // Occasionally release a random live VM so states cover partly freed PMs.
    if (!live.empty() && rng.Bernoulli(0.3)) {
      const std::size_t k = rng.UniformIndex(live.size());
      state.Release(live[k]);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
    }
    const bool dbl = rng.Bernoulli(0.35);
    const Resource cpu = dbl ? 2 * (1 + static_cast<Resource>(rng.UniformIndex(8)))
                             : 1 + static_cast<Resource>(rng.UniformIndex(12));
    const VmRequest req = testing_support::MakeCreate(next_id++, cpu, 2 * cpu,
                                                      dbl ? NumaMode::kDouble : NumaMode::kSingle);
    state.set_pending(req);
    const Action a(static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(2 * state.num_pms()))));
    const bool oracle = OracleFeasible(state.pms()[a.pm()], req, a.slot());
    if (Feasible(state.snapshot(), a) != oracle) ++violations;

    const ClusterState before = state;
    if (!oracle) {
      try {
        state.Allocate(a);
        ++violations;
      } catch (const InfeasibleAllocation &) {
      }
      if (!(state == before)) ++violations;
      continue;
    }
    ++feasible;
    state.Allocate(a);
    const ClusterState after = state;
    if (!(Total(after) == Total(before) - req.resources)) ++violations;
    for (int p = 0; p < state.num_pms(); ++p) {
      if (p != a.pm() && !(after.pms()[p] == before.pms()[p])) ++violations;
      for (const auto &n : after.pms()[p].remaining) {
        if (!n.NonNegative()) ++violations;
      }
    }
    // Round trip: releasing restores the pre-allocation resources exactly.
    ClusterState undo = after;
    undo.Release(req.vm_id);
    if (!(undo.pms() == before.pms())) ++violations;
    live.push_back(req.vm_id);
    // Reset when the cluster is saturated so feasible triples keep coming.
    if (FeasibleActionSet(state.snapshot()).empty()) {
      for (VmId id : live) state.Release(id);
      live.clear();
    }
  }
  const double secs = Seconds(start);
  return {violations == 0 && secs < kDynamicsSeconds,
          fmt::format("{} triples ({} feasible), {} violations, {:.2f}s (limit {:.0f}s)",
                      kDynamicsTriples, feasible, violations, secs, kDynamicsSeconds)};
}

// ---------------------------------------------------------------------------
// 2. Best-Fit realizability.

Outcome BestFitRealizability() {
  const auto start = std::chrono::steady_clock::now();
  // h(pm) = sum over NUMAs of (remaining cpu share)^2. For a fixed request the
  // gain h(after) - h(before) falls strictly with the pre-placement remaining
  // cpu of the target, so the decomposed argmax is the tightest fit.
  const PmValueFn h = [](const Eigen::MatrixXd &x) -> Eigen::VectorXd {
    return (x.row(0).array().square() + x.row(2).array().square()).matrix().transpose();
  };
  Rng rng(202);
  int checked = 0;
  int agree = 0;
  while (checked < kRealizabilityStates) {
    const ClusterSnapshot s = RandomFeasibleSnapshot(rng, 1 + static_cast<int>(rng.UniformIndex(12)));
    const auto cands = FeasibleActionSet(s);
    std::vector<Resource> keys;
    for (Action a : cands) keys.push_back(testing_support::BestFitKey(s, a));
    const Resource best = *std::min_element(keys.begin(), keys.end());
    if (std::count(keys.begin(), keys.end(), best) != 1) continue;
    ++checked;
    agree += DecomposedArgmax(s, cands, h) == BestFit(s) ? 1 : 0;
  }
  const double secs = Seconds(start);
  return {agree == checked && secs < kRealizabilitySeconds,
          fmt::format("{}/{} unique-argmax states agree, {:.2f}s (limit {:.0f}s)", agree, checked,
                      secs, kRealizabilitySeconds)};
}

// ---------------------------------------------------------------------------
// 3. Gradients.

template <typename LossFn>
double MaxRelativeError(const Mlp &net, const Mlp &analytic, LossFn loss) {
  Mlp probe = net;
  std::vector<double> theta = net.Flatten();
  const std::vector<double> grad = analytic.Flatten();
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + kFiniteDifferenceStep;
    probe.Unflatten(theta);
    const double up = loss(probe);
    theta[i] = saved - kFiniteDifferenceStep;
    probe.Unflatten(theta);
    const double down = loss(probe);
    theta[i] = saved;
    const double numeric = (up - down) / (2 * kFiniteDifferenceStep);
    const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
    if (scale > 1e-7) worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  return worst;
}

Outcome GradientCheck() {
  Rng rng(303);
  double worst_set = 0.0;
  double worst_selected = 0.0;
  for (int trial = 0; trial < kGradientNets; ++trial) {
    const int in = 2 + static_cast<int>(rng.UniformIndex(6));
    const int hidden = 3 + static_cast<int>(rng.UniformIndex(6));
    const int depth = 2 + static_cast<int>(rng.UniformIndex(5));
    const Mlp net = Mlp::Random(MlpWidths(in, hidden, 1, depth), rng.NextU64());

    SetRegressionBatch batch;
    batch.offsets.push_back(0);
    const int samples = 1 + static_cast<int>(rng.UniformIndex(6));
    for (int b = 0; b < samples; ++b) {
      batch.offsets.push_back(batch.offsets.back() + 1 + rng.UniformIndex(5));
      batch.targets.push_back(rng.Uniform(-2, 2));
    }
    batch.inputs.resize(in, static_cast<Eigen::Index>(batch.offsets.back()));
    for (Eigen::Index i = 0; i < batch.inputs.size(); ++i) batch.inputs.data()[i] = rng.Uniform01();
    auto set_loss = [&](const Mlp &m) {
      const Eigen::MatrixXd out = m.Forward(batch.inputs);
      double loss = 0.0;
      for (int b = 0; b < samples; ++b) {
        double pred = 0.0;
        for (std::size_t c = batch.offsets[b]; c < batch.offsets[b + 1]; ++c) pred += out(0, static_cast<Eigen::Index>(c));
        loss += (pred - batch.targets[b]) * (pred - batch.targets[b]);
      }
      return loss / samples;
    };
    worst_set = std::max(worst_set, MaxRelativeError(net, SumRegressionGradient(net, batch).gradient, set_loss));

    const int outs = 2 + static_cast<int>(rng.UniformIndex(5));
    const Mlp multi = Mlp::Random(MlpWidths(in, hidden, outs, depth), rng.NextU64());
    std::vector<int> picks;
    std::vector<double> targets;
    for (int b = 0; b < samples; ++b) {
      picks.push_back(static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(outs))));
      targets.push_back(rng.Uniform(-2, 2));
    }
    const Eigen::MatrixXd x = batch.inputs.leftCols(samples);
    auto selected_loss = [&](const Mlp &m) {
      const Eigen::MatrixXd out = m.Forward(x);
      double loss = 0.0;
      for (int b = 0; b < samples; ++b) loss += std::pow(out(picks[b], b) - targets[b], 2);
      return loss / samples;
    };
    worst_selected = std::max(
        worst_selected,
        MaxRelativeError(multi, SelectedOutputGradient(multi, x, picks, targets).gradient, selected_loss));
  }
  const double worst = std::max(worst_set, worst_selected);
  return {worst < kGradientRelError,
          fmt::format("{} nets, max relative error {:.2e} (set {:.2e}, selected {:.2e}; limit {:.0e})",
                      kGradientNets, worst, worst_set, worst_selected, kGradientRelError)};
}

// ---------------------------------------------------------------------------
// 4. Constant candidate space.

Outcome ConstantCandidateSpace() {
  Rng rng(404);
  bool ok = true;
  std::string detail;
  for (int n : {5, 50, 500}) {
    const int states = n == 500 ? 300 : 1000;
    std::size_t largest = 0;
    double sum_full = 0.0;
    int full_states = 0;
    for (int i = 0; i < states; ++i) {
      const ClusterSnapshot s = RandomSnapshot(rng, n);
      const auto feasible = FeasibleActionSet(s);
      if (feasible.empty()) continue;
      const auto cands = TopKFilter(s, kFilterK);
      largest = std::max(largest, cands.size());
      ok = ok && cands.size() == std::min<std::size_t>(kFilterK, feasible.size());
      for (Action a : cands) ok = ok && Feasible(s, a);
      if (feasible.size() >= kFilterK) {
        sum_full += static_cast<double>(cands.size());
        ++full_states;
      }
    }
    const double mean = full_states ? sum_full / full_states : 0.0;
    ok = ok && largest <= kFilterK && (full_states == 0 || mean == kFilterK);
    detail += fmt::format("{}N={}: max {}, mean {:.2f} over {} states with >=5 feasible", detail.empty() ? "" : "; ",
                          n, largest, mean, full_states);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 5. Incremental vs naive scoring.

Outcome DecompositionEquivalence() {
  Rng rng(505);
  double worst = 0.0;
  std::size_t candidates = 0;
  for (int i = 0; i < kDecompositionStates; ++i) {
    const Mlp net = Mlp::Random(MlpWidths(4, 32, 1, 6), rng.NextU64());
    const ClusterSnapshot s = RandomFeasibleSnapshot(rng, 50);
    const auto cands = FeasibleActionSet(s);
    const auto values = EvaluateCandidates(s, cands, net);
    for (std::size_t j = 0; j < cands.size(); ++j) {
      worst = std::max(worst, std::abs(values[j].value - testing_support::NaiveNetworkValue(s, cands[j], net)));
    }
    candidates += cands.size();
  }
  return {worst <= kDecompositionTolerance,
          fmt::format("{} states, {} candidates, max |incremental - naive| = {:.2e} (limit {:.0e})",
                      kDecompositionStates, candidates, worst, kDecompositionTolerance)};
}

// ---------------------------------------------------------------------------
// 6-8. Learning at desk scale.

RunConfig DeskConfig(int n_pms, std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.scenario.n_pms_initial = n_pms;
  c.workload.trace_length = 200;
  AgentConfig &a = c.agent;
  a.gamma = 0.99;
  a.epsilon = 0.1;
  a.batch_size = 64;
  a.learning_rate = 1e-3;
  a.tau = 0.01;
  a.epochs = kLearningEpochs;
  a.episodes_per_epoch = 5;
  a.k = kFilterK;
  a.hidden = 32;
  a.depth = 6;
  a.update_every = 1;
  c.Resolve();
  c.Validate();
  return c;
}

struct LearningRun {
  double final_eval = 0.0;       // agent, greedy, last kFinalWindow epochs
  double final_best_fit = 0.0;   // Best-Fit on the same traces
  double seconds = 0.0;
  std::unique_ptr<Trainer> trainer;
};

LearningRun Train(const RunConfig &config, bool with_best_fit) {
  const auto start = std::chrono::steady_clock::now();
  LearningRun run;
  run.trainer = std::make_unique<Trainer>(config);
  std::vector<TrainingLogRow> rows;
  double bf_sum = 0.0;
  int bf_count = 0;
  const int epochs = config.agent.epochs;
  while (run.trainer->epoch() < epochs) {
    rows.push_back(run.trainer->RunEpoch().row);
    const int e = run.trainer->epoch();
    if (with_best_fit && e > epochs - kFinalWindow) {
      for (int i = 0; i < config.agent.episodes_per_epoch; ++i) {
        Episode ep = PrepareEpisode(config.scenario, TrainingTrace(config, e, i), config.reward);
        Rng rng(0);
        bf_sum += static_cast<double>(RunEpisode(ep, BestFitPolicy{}, rng).scheduled_length);
        ++bf_count;
      }
    }
  }
  run.final_eval = FinalMean(rows, kFinalWindow);
  run.final_best_fit = bf_count ? bf_sum / bf_count : 0.0;
  run.seconds = Seconds(start);
  return run;
}

struct LearningResults {
  // Indexed like kLearningSeeds.
  std::vector<LearningRun> cvd;
  std::vector<LearningRun> flat;
};

double MeanOf(const std::vector<LearningRun> &runs, double LearningRun::*field) {
  double s = 0.0;
  for (const auto &r : runs) s += r.*field;
  return s / static_cast<double>(runs.size());
}

std::string PerSeed(const std::vector<LearningRun> &runs, double LearningRun::*field) {
  std::string out;
  for (const auto &r : runs) out += fmt::format("{}{:.2f}", out.empty() ? "" : "/", r.*field);
  return out;
}

LearningResults RunLearning(int n_pms) {
  LearningResults out;
  for (std::uint64_t seed : kLearningSeeds) {
    const RunConfig c = DeskConfig(n_pms, seed);
    out.cvd.push_back(Train(c, true));
    spdlog::info("N={} seed {}: cvd {:.2f} vs best-fit {:.2f} ({:.0f}s)", n_pms, seed,
                 out.cvd.back().final_eval, out.cvd.back().final_best_fit, out.cvd.back().seconds);
    RunConfig f = c;
    f.agent.kind = AgentKind::kFlat;
    f.scheduler = "flat_dqn";
    out.flat.push_back(Train(f, false));
    spdlog::info("N={} seed {}: flat {:.2f} ({:.0f}s)", n_pms, seed, out.flat.back().final_eval,
                 out.flat.back().seconds);
  }
  return out;
}

Outcome LearningCheck(const std::vector<std::pair<int, const LearningResults *>> &settings) {
  bool ok = true;
  std::string detail;
  for (const auto &[n, res] : settings) {
    const double cvd = MeanOf(res->cvd, &LearningRun::final_eval);
    const double bf = MeanOf(res->cvd, &LearningRun::final_best_fit);
    const double flat = MeanOf(res->flat, &LearningRun::final_eval);
    const bool vs_bf = cvd >= kBestFitRatio * bf;
    const bool vs_flat = cvd > flat;
    ok = ok && vs_bf && vs_flat;
    detail += fmt::format(
        "{}N={}: cvd {:.2f} [{}], best-fit {:.2f}, ratio {:.3f} (need >= {:.2f}) {}, flat {:.2f} [{}] {}",
        detail.empty() ? "" : "; ", n, cvd, PerSeed(res->cvd, &LearningRun::final_eval), bf, cvd / bf,
        kBestFitRatio, vs_bf ? "ok" : "short", flat, PerSeed(res->flat, &LearningRun::final_eval),
        vs_flat ? "beaten" : "not beaten");
  }
  return {ok, detail};
}

Outcome FilterAblation(const LearningResults &n5) {
  std::vector<LearningRun> unfiltered;
  for (std::uint64_t seed : kLearningSeeds) {
    RunConfig c = DeskConfig(5, seed);
    c.agent.use_filter = false;
    unfiltered.push_back(Train(c, false));
    spdlog::info("N=5 seed {}: no-filter {:.2f} ({:.0f}s)", seed, unfiltered.back().final_eval,
                 unfiltered.back().seconds);
  }
  const double filtered = MeanOf(n5.cvd, &LearningRun::final_eval);
  const double without = MeanOf(unfiltered, &LearningRun::final_eval);
  return {without < filtered,
          fmt::format("filtered {:.2f} [{}], no-filter {:.2f} [{}]", filtered,
                      PerSeed(n5.cvd, &LearningRun::final_eval), without,
                      PerSeed(unfiltered, &LearningRun::final_eval))};
}

Outcome Generalization(const LearningResults &n5, const fs::path &work) {
  const fs::path checkpoint = work / "n5_checkpoint.bin";
  n5.cvd.front().trainer->SaveCheckpoint(checkpoint);
  const LoadedPolicy loaded = LoadPolicyCheckpoint(checkpoint);
  const RunConfig &config = loaded.config;

  ScenarioConfig larger = config.scenario;
  larger.n_pms_initial = 10;
  ScenarioConfig growing = config.scenario;
  growing.mode = ScenarioMode::kExpansion;
  growing.expansion_step = 2;
  growing.n_pms_max = 11;

  bool ok = true;
  std::string detail;
  for (const auto &[label, scenario] :
       {std::pair<std::string, ScenarioConfig>{"N=10", larger}, {"expansion 5->11", growing}}) {
    std::vector<EvalRecord> agent;
    std::vector<EvalRecord> ff;
    try {
      agent = Evaluate(config, scenario, *loaded.policy, kTransferTraces);
      ff = Evaluate(config, scenario, FirstFitPolicy{}, kTransferTraces);
    } catch (const std::exception &e) {
      ok = false;
      detail += fmt::format("{}{}: error {}", detail.empty() ? "" : "; ", label, e.what());
      continue;
    }
    int wins = 0;
    std::string pairs;
    int max_pms = 0;
    for (int i = 0; i < kTransferTraces; ++i) {
      wins += agent[i].result.scheduled_length >= ff[i].result.scheduled_length ? 1 : 0;
      pairs += fmt::format("{}{}:{}", pairs.empty() ? "" : " ", agent[i].result.scheduled_length,
                           ff[i].result.scheduled_length);
      max_pms = std::max(max_pms, agent[i].result.final_pms);
    }
    ok = ok && wins >= kTransferWins;
    detail += fmt::format("{}{}: >= first-fit on {}/{} (need {}), max PMs {}, agent:ff {}",
                          detail.empty() ? "" : "; ", label, wins, kTransferTraces, kTransferWins,
                          max_pms, pairs);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 9. Expansion mechanics.

Outcome ExpansionMechanics() {
  Trace trace;
  for (int i = 0; i < 300; ++i) {
    VmRequest r = testing_support::MakeCreate(static_cast<VmId>(i + 1), 32, 64, NumaMode::kDouble);
    trace.events.push_back({i, r});
  }
  ScenarioConfig sc;
  sc.n_pms_initial = 50;
  sc.mode = ScenarioMode::kExpansion;
  sc.expansion_step = 10;
  sc.n_pms_max = 110;
  Episode ep = PrepareEpisode(sc, trace);
  Rng rng(0);
  const EpisodeResult r = RunEpisode(ep, FirstFitPolicy{}, rng);
  std::vector<int> sizes;
  for (const auto &e : r.expansion_events) sizes.push_back(e.n_pms);
  const bool ok = sizes == std::vector<int>{60, 70, 80, 90, 100, 110} && ep.done() &&
                  !r.trace_exhausted && r.final_pms == 110 && r.scheduled_length == 110;
  std::string seq;
  for (int s : sizes) seq += fmt::format("{}{}", seq.empty() ? "" : ",", s);
  return {ok, fmt::format("PM counts [{}], final {}, ended by {}", seq, r.final_pms,
                          r.trace_exhausted ? "trace exhaustion" : "cap")};
}

// ---------------------------------------------------------------------------
// 10. Determinism of the train command.

std::string ReadFile(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome TrainDeterminism(const fs::path &work) {
  RunConfig c = DeskConfig(2, 7);
  c.agent.epochs = 30;
  WriteManifest(work / "manifest_src", "train", c);
  const fs::path manifest = work / "manifest_src" / "manifest.json";
  std::vector<std::string> logs;
  for (const char *run : {"run_a", "run_b"}) {
    const std::string cmd = fmt::format("VMSCHED_LOG_LEVEL=error \"{}\" train --config \"{}\" --out \"{}\"",
                                        VMSCHED_CLI_PATH, manifest.string(), (work / run).string());
    if (std::system(cmd.c_str()) != 0) return {false, "train command failed: " + cmd};
    logs.push_back(ReadFile(work / run / "train_log.csv"));
  }
  const auto lines = std::count(logs[0].begin(), logs[0].end(), '\n');
  return {logs[0] == logs[1] && lines == 31,
          fmt::format("{} log lines each, {}", lines, logs[0] == logs[1] ? "byte-identical" : "different")};
}

}  // namespace
}  // namespace vmsched

int main(int argc, char **argv) {
  using namespace vmsched;
  spdlog::set_level(spdlog::level::info);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids) {
      if (only.count(id)) return true;
    }
    return false;
  };

  const fs::path work = fs::temp_directory_path() / "vmsched_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const char *name, const Outcome &o) {
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [&](int id, const char *name, const std::function<Outcome()> &fn) {
    if (!only.empty() && !only.count(id)) return;
    try {
      report(id, name, fn());
    } catch (const std::exception &e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "dynamics oracle", DynamicsOracle);
  guarded(2, "best-fit realizability", BestFitRealizability);
  guarded(3, "gradient correctness", GradientCheck);
  guarded(4, "constant candidate space", ConstantCandidateSpace);
  guarded(5, "decomposed scoring equivalence", DecompositionEquivalence);

  std::optional<LearningResults> n2;
  std::optional<LearningResults> n5;
  if (wanted({6})) n2 = RunLearning(2);
  if (wanted({6, 7, 8})) n5 = RunLearning(5);
  guarded(6, "desk-scale learning", [&] { return LearningCheck({{2, &*n2}, {5, &*n5}}); });
  guarded(7, "filter ablation direction", [&] { return FilterAblation(*n5); });
  guarded(8, "generalization smoke", [&] { return Generalization(*n5, work); });

  guarded(9, "expansion mechanics", ExpansionMechanics);
  guarded(10, "train determinism", [&] { return TrainDeterminism(work); });

  fs::remove_all(work);
  std::printf("%s: %d criterion failure(s)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
