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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmsched/env.h"
#include "vmsched/trace.h"

namespace vmsched {

struct MetricStats {
  double mean = 0.0;
  std::optional<double> std;  // sample std, present only for n >= 2
  std::size_t n = 0;
};

/// Throws EmptyInput.
MetricStats Summarize(std::span<const double> values);

/// Results of one policy on one scenario across seeds.
struct RunSummary {
  std::string policy;
  ScenarioConfig scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeResult> results;
  MetricStats scheduled_length;
  MetricStats avg_cpu_utilization;
  MetricStats income;
};

/// Throws EmptyInput. `seeds` may be empty or match `results` in length.
RunSummary Aggregate(std::span<const EpisodeResult> results, std::string policy = {},
                     const ScenarioConfig &scenario = {}, std::vector<std::uint64_t> seeds = {});

/// Scenario label without the warm start ratio, e.g. "non-expansion-N50".
std::string ScenarioLabel(const ScenarioConfig &scenario);

/// One row per (policy, scenario, ratio): scenario, warm_start, metric,
/// policy, mean, std (empty for a single seed), n. Metrics are length,
/// cpu_allo and income.
void WriteComparisonCsv(std::ostream &out, std::span<const RunSummary> summaries);
/// Nested as scenario -> metric -> policy -> warm start -> {mean, std, n}.
void WriteComparisonJson(std::ostream &out, std::span<const RunSummary> summaries);

/// One evaluated episode for the batch-evaluation CSV.
struct EvalRecord {
  std::uint64_t seed = 0;
  std::string scenario;
  std::string policy;
  EpisodeResult result;
};

/// Columns: seed, scenario, policy, length, income, cpu_allo.
void WriteEvalCsv(std::ostream &out, std::span<const EvalRecord> records);

/// One training-log row per epoch. loss is NaN (written empty) for epochs
/// without a gradient update.
struct TrainingLogRow {
  int epoch = 0;
  double mean_return = 0.0;
  double scheduled_length = 0.0;
  double eval_length = 0.0;
  double loss = 0.0;
  double epsilon = 0.0;
  std::size_t buffer_size = 0;
  double mean_candidates = 0.0;
  int filter_k = 0;

  friend bool operator==(const TrainingLogRow &, const TrainingLogRow &) = default;
};

std::string TrainingLogHeader();
std::string FormatTrainingLogRow(const TrainingLogRow &row);

/// Throws ParseError on a bad header or row.
std::vector<TrainingLogRow> ParseTrainingLog(std::istream &in);
std::vector<TrainingLogRow> LoadTrainingLog(const std::string &path);

/// Trailing moving average; the first window - 1 points average over the
/// points available so far. Output has the input's length.
std::vector<double> MovingAverage(std::span<const double> series, int window = 10);

enum class CurveMetric { kScheduledLength, kEvalLength, kMeanReturn };

struct CurvePoint {
  int epoch = 0;
  double mean = 0.0;
  std::optional<double> std;
};

/// Smooths each run's series, then takes mean and sample std across runs
/// epoch by epoch. Runs are truncated to the shortest one.
std::vector<CurvePoint> LearningCurve(std::span<const std::vector<TrainingLogRow>> runs,
                                      int window = 10,
                                      CurveMetric metric = CurveMetric::kScheduledLength);

/// Mean of the metric over the last `last_n` rows (all rows if fewer).
/// Throws EmptyInput.
double FinalMean(std::span<const TrainingLogRow> rows, int last_n,
                 CurveMetric metric = CurveMetric::kEvalLength);

void WriteLearningCurveCsv(std::ostream &out, std::span<const CurvePoint> curve);

}  // namespace vmsched
