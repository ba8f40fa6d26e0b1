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

#include "vmsched/report.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "json.hpp"
#include "vmsched/errors.h"

namespace vmsched {
namespace {

constexpr const char *kLogHeader =
    "epoch,mean_return,scheduled_length,eval_length,loss,epsilon,buffer_size,mean_candidates,"
    "filter_k";

std::vector<std::string> SplitCsv(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string &s, std::size_t line, const char *column) {
  if (s.empty()) throw ParseError(line, std::string("empty ") + column);
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ParseError(line, std::string("bad ") + column + " '" + s + "'");
  return v;
}

long long ParseInt(const std::string &s, std::size_t line, const char *column) {
  if (s.empty()) throw ParseError(line, std::string("empty ") + column);
  char *end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) throw ParseError(line, std::string("bad ") + column + " '" + s + "'");
  return v;
}

std::string FormatStd(const std::optional<double> &std) {
  return std ? fmt::format("{:.6f}", *std) : std::string();
}

struct MetricView {
  const char *name;
  const MetricStats RunSummary::*stats;
};

constexpr MetricView kMetrics[] = {
    {"length", &RunSummary::scheduled_length},
    {"cpu_allo", &RunSummary::avg_cpu_utilization},
    {"income", &RunSummary::income},
};

double MetricOf(const TrainingLogRow &row, CurveMetric metric) {
  switch (metric) {
    case CurveMetric::kScheduledLength:
      return row.scheduled_length;
    case CurveMetric::kEvalLength:
      return row.eval_length;
    case CurveMetric::kMeanReturn:
      return row.mean_return;
  }
  return 0.0;
}

}  // namespace

MetricStats Summarize(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("no values to summarize");
  MetricStats s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

RunSummary Aggregate(std::span<const EpisodeResult> results, std::string policy,
                     const ScenarioConfig &scenario, std::vector<std::uint64_t> seeds) {
  if (results.empty()) throw EmptyInput("no episode results to aggregate");
  if (!seeds.empty() && seeds.size() != results.size()) {
    throw ConfigError("aggregate: one seed per result required");
  }
  RunSummary r;
  r.policy = std::move(policy);
  r.scenario = scenario;
  r.seeds = std::move(seeds);
  r.results.assign(results.begin(), results.end());
  std::vector<double> length, util, income;
  for (const auto &e : results) {
    length.push_back(static_cast<double>(e.scheduled_length));
    util.push_back(e.avg_cpu_utilization);
    income.push_back(e.income);
  }
  r.scheduled_length = Summarize(length);
  r.avg_cpu_utilization = Summarize(util);
  r.income = Summarize(income);
  return r;
}

std::string ScenarioLabel(const ScenarioConfig &scenario) {
  std::string label = ToString(scenario.mode) + "-N" + std::to_string(scenario.n_pms_initial);
  if (scenario.mode == ScenarioMode::kExpansion) {
    label += "to" + std::to_string(scenario.n_pms_max) + "s" + std::to_string(scenario.expansion_step);
  }
  return label;
}

void WriteComparisonCsv(std::ostream &out, std::span<const RunSummary> summaries) {
  out << "scenario,warm_start,metric,policy,mean,std,n\n";
  for (const auto &m : kMetrics) {
    for (const auto &s : summaries) {
      const MetricStats &st = s.*m.stats;
      out << fmt::format("{},{:.2f},{},{},{:.6f},{},{}\n", ScenarioLabel(s.scenario),
                         s.scenario.warm_start_ratio, m.name, s.policy, st.mean, FormatStd(st.std),
                         st.n);
    }
  }
}

void WriteComparisonJson(std::ostream &out, std::span<const RunSummary> summaries) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto &s : summaries) {
    for (const auto &m : kMetrics) {
      const MetricStats &st = s.*m.stats;
      nlohmann::ordered_json cell{{"mean", st.mean}, {"n", st.n}};
      cell["std"] = st.std ? nlohmann::ordered_json(*st.std) : nlohmann::ordered_json(nullptr);
      root[ScenarioLabel(s.scenario)][m.name][s.policy][fmt::format("{:.2f}", s.scenario.warm_start_ratio)] =
          cell;
    }
  }
  out << root.dump(2) << "\n";
}

void WriteEvalCsv(std::ostream &out, std::span<const EvalRecord> records) {
  out << "seed,scenario,policy,length,income,cpu_allo\n";
  for (const auto &r : records) {
    out << fmt::format("{},{},{},{},{:.6f},{:.6f}\n", r.seed, r.scenario, r.policy,
                       r.result.scheduled_length, r.result.income, r.result.avg_cpu_utilization);
  }
}

std::string TrainingLogHeader() { return kLogHeader; }

std::string FormatTrainingLogRow(const TrainingLogRow &row) {
  const std::string loss = std::isnan(row.loss) ? std::string() : fmt::format("{:.9g}", row.loss);
  return fmt::format("{},{:.6f},{:.4f},{:.4f},{},{:.4f},{},{:.4f},{}", row.epoch, row.mean_return,
                     row.scheduled_length, row.eval_length, loss, row.epsilon, row.buffer_size,
                     row.mean_candidates, row.filter_k);
}

std::vector<TrainingLogRow> ParseTrainingLog(std::istream &in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(line_no, "missing header");
  if (line != kLogHeader) throw ParseError(line_no, "unexpected header '" + line + "'");
  std::vector<TrainingLogRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitCsv(line);
    if (f.size() != 9) throw ParseError(line_no, "expected 9 columns, got " + std::to_string(f.size()));
    TrainingLogRow r;
    r.epoch = static_cast<int>(ParseInt(f[0], line_no, "epoch"));
    r.mean_return = ParseDouble(f[1], line_no, "mean_return");
    r.scheduled_length = ParseDouble(f[2], line_no, "scheduled_length");
    r.eval_length = ParseDouble(f[3], line_no, "eval_length");
    r.loss = f[4].empty() ? std::nan("") : ParseDouble(f[4], line_no, "loss");
    r.epsilon = ParseDouble(f[5], line_no, "epsilon");
    r.buffer_size = static_cast<std::size_t>(ParseInt(f[6], line_no, "buffer_size"));
    r.mean_candidates = ParseDouble(f[7], line_no, "mean_candidates");
    r.filter_k = static_cast<int>(ParseInt(f[8], line_no, "filter_k"));
    rows.push_back(r);
  }
  return rows;
}

std::vector<TrainingLogRow> LoadTrainingLog(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  return ParseTrainingLog(in);
}

std::vector<double> MovingAverage(std::span<const double> series, int window) {
  if (window < 1) throw ConfigError("moving average window must be >= 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= static_cast<std::size_t>(window)) sum -= series[i - window];
    const auto count = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out[i] = sum / static_cast<double>(count);
  }
  return out;
}

std::vector<CurvePoint> LearningCurve(std::span<const std::vector<TrainingLogRow>> runs, int window,
                                      CurveMetric metric) {
  if (runs.empty()) throw EmptyInput("no training logs");
  std::size_t len = runs.front().size();
  for (const auto &r : runs) len = std::min(len, r.size());
  std::vector<std::vector<double>> smoothed;
  for (const auto &run : runs) {
    std::vector<double> series;
    for (std::size_t i = 0; i < len; ++i) series.push_back(MetricOf(run[i], metric));
    smoothed.push_back(MovingAverage(series, window));
  }
  std::vector<CurvePoint> curve;
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> at;
    for (const auto &s : smoothed) at.push_back(s[i]);
    const MetricStats st = Summarize(at);
    curve.push_back({runs.front()[i].epoch, st.mean, st.std});
  }
  return curve;
}

double FinalMean(std::span<const TrainingLogRow> rows, int last_n, CurveMetric metric) {
  if (rows.empty() || last_n < 1) throw EmptyInput("no training rows");
  const std::size_t n = std::min(rows.size(), static_cast<std::size_t>(last_n));
  double sum = 0.0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) sum += MetricOf(rows[i], metric);
  return sum / static_cast<double>(n);
}

void WriteLearningCurveCsv(std::ostream &out, std::span<const CurvePoint> curve) {
  out << "epoch,mean,std\n";
  for (const auto &p : curve) out << fmt::format("{},{:.6f},{}\n", p.epoch, p.mean, FormatStd(p.std));
}

}  // namespace vmsched
