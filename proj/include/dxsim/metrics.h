// Copyright 2026 The dxsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Accuracy, efficiency and agreement statistics.
//
// Accuracy counts every session; timeouts and protocol failures are
// incorrect. Efficiency means (turns, findings, positive hit rate) are taken
// over diagnosed sessions only, and the positive hit rate is averaged per
// case rather than computed from mean counts.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dxsim/judge.h"
#include "dxsim/kb.h"

namespace dxsim {

struct SessionRecord;
struct DiagnosisKey;

/// Lowercase, drop parentheticals and apostrophes, other punctuation to
/// spaces, collapse whitespace.
std::string normalize_diagnosis(std::string_view name);

/// Matches the canonical name or any alias after normalization.
bool diagnosis_correct(std::string_view predicted, const DiseaseNode& truth);
bool diagnosis_correct(std::string_view predicted, const DiagnosisKey& truth);

enum class SessionStatus { kDiagnosed, kTimeout, kFailure };

struct SessionMetrics {
  SessionStatus status = SessionStatus::kDiagnosed;
  bool correct = false;
  int turns = 0;
  int positive = 0;
  int negative = 0;
  /// positive / (positive + negative); empty when there are no findings.
  std::optional<double> phr;
};

SessionMetrics session_metrics(const SessionRecord& record);
SessionMetrics session_metrics(const SessionRecord& record,
                               const DiseaseNode& truth);

struct RunSummary {
  double accuracy = 0.0;
  double mean_turns = 0.0;
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  /// NaN when no included session has findings.
  double mean_phr = 0.0;
  std::size_t n_cases = 0;
  std::size_t n_excluded = 0;
};

/// Throws PreconditionError on empty input.
RunSummary summarize_run(std::span<const SessionMetrics> metrics);

/// Positive rate computed from mean counts; kept for comparison with the
/// per-case mean used everywhere else.
double phr_ratio_of_means(double mean_positive, double mean_negative);

struct MeanSe {
  double mean = 0.0;
  /// Sample standard deviation / sqrt(R). NaN for a single run.
  double se = 0.0;
};

/// Mean and standard error; throws PreconditionError for fewer than 2 values.
MeanSe mean_se(std::span<const double> values);

struct AggregateSummary {
  MeanSe accuracy;
  MeanSe turns;
  MeanSe positive;
  MeanSe negative;
  MeanSe phr;
  std::size_t runs = 0;

  /// "accuracy", "turns", "positive", "negative" or "phr".
  /// Throws NotFoundError for anything else.
  const MeanSe& get(std::string_view metric) const;
};

/// Throws PreconditionError for fewer than 2 runs.
AggregateSummary aggregate_runs(std::span<const RunSummary> summaries);

/// Single run: means as-is, standard errors NaN.
AggregateSummary single_run_aggregate(const RunSummary& summary);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
};

double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Ranks 1..n; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Throws PreconditionError on length mismatch, length < 3, or constant
/// input.
Correlation correlations(std::span<const double> xs,
                         std::span<const double> ys);

struct RankEntry {
  std::string model;
  double value = 0.0;
  /// Shares its value with a neighbour; order among them is by name.
  bool tied = false;
};

using Ranking = std::vector<RankEntry>;

/// Descending by `metric`, ties by model name. Throws PreconditionError for
/// fewer than 2 models and NotFoundError for an unknown metric.
Ranking rank_models(const std::map<std::string, AggregateSummary>& summaries,
                    std::string_view metric);

/// Spearman correlation of the two rankings' positions over their shared
/// model set. Throws PreconditionError if the model sets differ.
double rank_agreement(const Ranking& a, const Ranking& b);

/// Modal label of an odd-sized (>= 3) vote. Throws PreconditionError
/// otherwise.
bool majority_vote(std::span<const bool> labels);

// Judge panel aggregates ---------------------------------------------------

struct PanelRunSummary {
  RubricMeans dims;
  double dqs = 0.0;
  /// DQS mean over transcripts that ended in a diagnosis. NaN when none.
  double dqs_without_timeouts = 0.0;
  std::size_t n_scored = 0;
  std::size_t n_failed = 0;
};

/// Means over the records that carry a panel result. Returns nullopt when
/// none does.
std::optional<PanelRunSummary> summarize_panels(
    std::span<const SessionRecord> records);

struct PanelAggregate {
  std::array<MeanSe, kDimensionCount> dims;
  MeanSe dqs;
  MeanSe dqs_without_timeouts;
  std::size_t runs = 0;
};

/// One run gives NaN standard errors.
PanelAggregate aggregate_panels(std::span<const PanelRunSummary> runs);

}  // namespace dxsim
