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

#include "dxsim/metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "dxsim/error.h"
#include "dxsim/orchestrator.h"

namespace dxsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

bool matches_any(std::string_view predicted, std::string_view name,
                 const std::vector<std::string>& aliases) {
  const std::string p = normalize_diagnosis(predicted);
  if (p.empty()) return false;
  if (p == normalize_diagnosis(name)) return true;
  return std::any_of(aliases.begin(), aliases.end(), [&](const auto& a) {
    return p == normalize_diagnosis(a);
  });
}

SessionMetrics metrics_for(const SessionRecord& record, bool correct_name) {
  SessionMetrics m;
  switch (record.outcome.index()) {
    case 0:
      m.status = SessionStatus::kDiagnosed;
      break;
    case 1:
      m.status = SessionStatus::kTimeout;
      break;
    default:
      m.status = SessionStatus::kFailure;
  }
  m.correct = m.status == SessionStatus::kDiagnosed && correct_name;
  m.turns = record.doctor_turns;
  m.positive = record.positive_findings;
  m.negative = record.negative_findings;
  if (m.positive + m.negative > 0) {
    m.phr = static_cast<double>(m.positive) / (m.positive + m.negative);
  }
  return m;
}

const std::string* predicted_name(const SessionRecord& record) {
  if (const auto* d = std::get_if<Diagnosed>(&record.outcome)) {
    return &d->disease;
  }
  return nullptr;
}

}  // namespace

std::string normalize_diagnosis(std::string_view name) {
  std::string out;
  int depth = 0;
  for (char c : name) {
    if (c == '(' || c == '[') {
      ++depth;
      continue;
    }
    if (c == ')' || c == ']') {
      if (depth > 0) --depth;
      out.push_back(' ');
      continue;
    }
    if (depth > 0 || c == '\'') continue;
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      out.push_back(' ');
    }
  }
  std::string collapsed;
  for (char c : out) {
    if (c == ' ' && (collapsed.empty() || collapsed.back() == ' ')) continue;
    collapsed.push_back(c);
  }
  if (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

bool diagnosis_correct(std::string_view predicted, const DiseaseNode& truth) {
  return matches_any(predicted, truth.canonical_name, truth.aliases);
}

bool diagnosis_correct(std::string_view predicted, const DiagnosisKey& truth) {
  return matches_any(predicted, truth.name, truth.aliases);
}

SessionMetrics session_metrics(const SessionRecord& record) {
  const std::string* p = predicted_name(record);
  return metrics_for(record, p && diagnosis_correct(*p, record.truth));
}

SessionMetrics session_metrics(const SessionRecord& record,
                               const DiseaseNode& truth) {
  const std::string* p = predicted_name(record);
  return metrics_for(record, p && diagnosis_correct(*p, truth));
}

RunSummary summarize_run(std::span<const SessionMetrics> metrics) {
  if (metrics.empty()) throw PreconditionError("cannot summarize an empty run");
  RunSummary s;
  s.n_cases = metrics.size();
  std::vector<double> turns, pos, neg, phr;
  std::size_t correct = 0;
  for (const auto& m : metrics) {
    if (m.correct) ++correct;
    if (m.status != SessionStatus::kDiagnosed) {
      ++s.n_excluded;
      continue;
    }
    turns.push_back(m.turns);
    pos.push_back(m.positive);
    neg.push_back(m.negative);
    if (m.phr) phr.push_back(*m.phr);
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(s.n_cases);
  s.mean_turns = mean_of(turns);
  s.mean_positive = mean_of(pos);
  s.mean_negative = mean_of(neg);
  s.mean_phr = mean_of(phr);
  return s;
}

double phr_ratio_of_means(double mean_positive, double mean_negative) {
  const double total = mean_positive + mean_negative;
  if (!(total > 0.0)) return kNaN;
  return mean_positive / total;
}

MeanSe mean_se(std::span<const double> values) {
  if (values.size() < 2) {
    throw PreconditionError("standard error needs at least 2 values");
  }
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double n = static_cast<double>(values.size());
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

const MeanSe& AggregateSummary::get(std::string_view metric) const {
  if (metric == "accuracy") return accuracy;
  if (metric == "turns") return turns;
  if (metric == "positive") return positive;
  if (metric == "negative") return negative;
  if (metric == "phr") return phr;
  throw NotFoundError("unknown metric \"" + std::string(metric) + "\"");
}

AggregateSummary aggregate_runs(std::span<const RunSummary> summaries) {
  if (summaries.size() < 2) {
    throw PreconditionError("aggregation needs at least 2 runs");
  }
  auto column = [&](double RunSummary::*field) {
    std::vector<double> v;
    for (const auto& s : summaries) v.push_back(s.*field);
    return mean_se(v);
  };
  AggregateSummary a;
  a.accuracy = column(&RunSummary::accuracy);
  a.turns = column(&RunSummary::mean_turns);
  a.positive = column(&RunSummary::mean_positive);
  a.negative = column(&RunSummary::mean_negative);
  a.phr = column(&RunSummary::mean_phr);
  a.runs = summaries.size();
  return a;
}

AggregateSummary single_run_aggregate(const RunSummary& s) {
  AggregateSummary a;
  a.accuracy = {s.accuracy, kNaN};
  a.turns = {s.mean_turns, kNaN};
  a.positive = {s.mean_positive, kNaN};
  a.negative = {s.mean_negative, kNaN};
  a.phr = {s.mean_phr, kNaN};
  a.runs = 1;
  return a;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw PreconditionError("pearson needs two equal-length, non-empty series");
  }
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw PreconditionError("correlation of a constant series is undefined");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw PreconditionError("spearman needs equal-length series");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

Correlation correlations(std::span<const double> xs,
                         std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw PreconditionError("correlation series differ in length");
  }
  if (xs.size() < 3) {
    throw PreconditionError("correlation needs at least 3 points");
  }
  return {pearson(xs, ys), spearman(xs, ys)};
}

Ranking rank_models(const std::map<std::string, AggregateSummary>& summaries,
                    std::string_view metric) {
  if (summaries.size() < 2) {
    throw PreconditionError("ranking needs at least 2 models");
  }
  Ranking r;
  for (const auto& [model, s] : summaries) {
    r.push_back({model, s.get(metric).mean, false});
  }
  std::stable_sort(r.begin(), r.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.model < b.model;
  });
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    if (r[i].value == r[i + 1].value) r[i].tied = r[i + 1].tied = true;
  }
  return r;
}

double rank_agreement(const Ranking& a, const Ranking& b) {
  if (a.size() != b.size()) {
    throw PreconditionError("rankings cover different model sets");
  }
  std::map<std::string, std::size_t> pos_b;
  for (std::size_t i = 0; i < b.size(); ++i) pos_b[b[i].model] = i + 1;
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = pos_b.find(a[i].model);
    if (it == pos_b.end()) {
      throw PreconditionError("model " + a[i].model +
                              " missing from the second ranking");
    }
    xa.push_back(static_cast<double>(i + 1));
    xb.push_back(static_cast<double>(it->second));
  }
  return spearman(xa, xb);
}

bool majority_vote(std::span<const bool> labels) {
  if (labels.size() < 3 || labels.size() % 2 == 0) {
    throw PreconditionError("majority vote needs an odd count of at least 3");
  }
  const auto yes = std::count(labels.begin(), labels.end(), true);
  return static_cast<std::size_t>(yes) * 2 > labels.size();
}

std::optional<PanelRunSummary> summarize_panels(
    std::span<const SessionRecord> records) {
  PanelRunSummary s;
  std::vector<double> dqs_all, dqs_diag;
  std::array<std::vector<double>, kDimensionCount> dims;
  for (const auto& r : records) {
    if (r.panel_failure) ++s.n_failed;
    if (!r.panel) continue;
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      dims[d].push_back(r.panel->aggregated.values[d]);
    }
    dqs_all.push_back(r.panel->dqs);
    if (!r.panel->timeout) dqs_diag.push_back(r.panel->dqs);
  }
  if (dqs_all.empty()) return std::nullopt;
  s.n_scored = dqs_all.size();
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    s.dims.values[d] = mean_of(dims[d]);
  }
  s.dqs = mean_of(dqs_all);
  s.dqs_without_timeouts = mean_of(dqs_diag);
  return s;
}

PanelAggregate aggregate_panels(std::span<const PanelRunSummary> runs) {
  if (runs.empty()) throw PreconditionError("no panel summaries to aggregate");
  auto column = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(get(r));
    return v.size() == 1 ? MeanSe{v[0], kNaN} : mean_se(v);
  };
  PanelAggregate a;
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    a.dims[d] = column([d](const PanelRunSummary& r) { return r.dims.values[d]; });
  }
  a.dqs = column([](const PanelRunSummary& r) { return r.dqs; });
  a.dqs_without_timeouts =
      column([](const PanelRunSummary& r) { return r.dqs_without_timeouts; });
  a.runs = runs.size();
  return a;
}

}  // namespace dxsim
