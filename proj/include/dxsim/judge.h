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

// Rubric-based diagnostic quality scoring by a five-judge panel.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dxsim/llm.h"

namespace dxsim {

enum class Dimension : std::size_t {
  kCce,  // chief complaint exploration
  kHc,   // history completeness
  kEci,  // evidence chain integrity
  kTj,   // test justification
  kDdx,  // differential diagnosis
  kDc,   // diagnostic correctness
  kDu,   // diagnostic uncertainty
};

inline constexpr std::size_t kDimensionCount = 7;
inline constexpr std::size_t kPanelSize = 5;

inline constexpr std::array<int, kDimensionCount> kDimensionMax{
    10, 10, 20, 10, 10, 30, 10};

inline constexpr std::array<std::string_view, kDimensionCount> kDimensionCode{
    "CCE", "HC", "ECI", "TJ", "DDx", "DC", "DU"};

/// Keys of the judge score document, in the order judges must emit them.
inline constexpr std::array<std::string_view, kDimensionCount> kJudgeKey{
    "Depth of Chief Complaint Inquiry",
    "Completeness of Medical History",
    "Integrity of Evidence Chain",
    "Appropriateness of Examinations",
    "Differential Diagnosis",
    "Diagnostic Accuracy",
    "Uncertainty Management",
};

/// Seven rubric dimensions. Raw judge scores are BasicRubric<int>; panel
/// aggregates are BasicRubric<double>.
template <typename Scalar>
struct BasicRubric {
  std::array<Scalar, kDimensionCount> values{};

  Scalar& operator[](Dimension d) {
    return values[static_cast<std::size_t>(d)];
  }
  const Scalar& operator[](Dimension d) const {
    return values[static_cast<std::size_t>(d)];
  }

  template <typename Other>
  BasicRubric<Other> cast() const {
    BasicRubric<Other> out;
    std::transform(values.begin(), values.end(), out.values.begin(),
                   [](Scalar v) { return static_cast<Other>(v); });
    return out;
  }

  bool operator==(const BasicRubric&) const = default;
};

using RubricScore = BasicRubric<int>;
using RubricMeans = BasicRubric<double>;

/// Throws BoundViolationError when a value lies outside [0, max].
RubricScore make_rubric(const std::array<int, kDimensionCount>& values);
bool within_bounds(const RubricScore& score);

struct DimensionWeights {
  std::array<double, kDimensionCount> w{0.10, 0.10, 0.20, 0.10,
                                        0.10, 0.30, 0.10};
};

/// Throws PreconditionError unless weights are non-negative and sum to 1
/// within 1e-9.
void validate(const DimensionWeights& weights);

/// Weighted sum of per-dimension scores rescaled to 0..100. With the default
/// weights this is exactly the raw dimension sum.
template <typename Scalar>
double dqs(const BasicRubric<Scalar>& score,
           const DimensionWeights& weights = {}) {
  double total = 0.0;
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    const double factor = (weights.w[d] * 100.0) / kDimensionMax[d];
    total += factor * static_cast<double>(score.values[d]);
  }
  return total;
}

/// Mean of five values after dropping one minimum and one maximum.
template <typename Scalar>
double trimmed_mean(std::array<Scalar, kPanelSize> v) {
  std::sort(v.begin(), v.end());
  return static_cast<double>(v[1] + v[2] + v[3]) / 3.0;
}

/// Per-dimension trimmed mean. Throws PreconditionError unless the panel
/// has exactly five valid scores.
RubricMeans trimmed_mean_panel(std::span<const RubricScore> panel);

/// Throws ProtocolError(kMissingSlot) when any argument is empty.
std::string render_judge_prompt(std::string_view transcript,
                                 std::string_view ground_truth,
                                 std::string_view predicted);

/// Parses the outermost {...} of `text` as JSON and reads the seven keys.
/// Throws ParseError, MissingFieldError or BoundViolationError.
RubricScore parse_judge_scores(std::string_view text);

struct JudgePanelResult {
  std::vector<RubricScore> per_judge;
  RubricMeans aggregated;
  double dqs = 0.0;
  /// Transcript ended without a diagnosis.
  bool timeout = false;

  bool operator==(const JudgePanelResult&) const = default;
};

struct SessionRecord;

/// Renders the prompt once, queries the five judges concurrently (one
/// corrective re-prompt each), trims and scores. Throws PanelFailureError
/// if any judge fails, or PreconditionError for a protocol-failure record.
JudgePanelResult score_transcript(const SessionRecord& record,
                                  std::span<ChatBackend* const> judges,
                                  const DimensionWeights& weights = {});

}  // namespace dxsim
