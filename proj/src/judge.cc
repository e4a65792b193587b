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

#include "dxsim/judge.h"

#include <cmath>
#include <future>

#include <nlohmann/json.hpp>

#include "dxsim/error.h"
#include "dxsim/orchestrator.h"
#include "dxsim/prompts.h"

namespace dxsim {

using nlohmann::json;

namespace {

constexpr std::string_view kJudgeReminder =
    "Your previous reply could not be read. Reply with only the JSON object "
    "holding the seven integer scores under the exact keys requested.";

RubricScore ask_judge(ChatBackend& judge, const std::string& prompt) {
  std::vector<ChatMessage> messages{{ChatRole::kUser, prompt}};
  for (int attempt = 0;; ++attempt) {
    std::string reply =
        judge.complete(ChatRequest::evaluation(messages, judge.model_id()));
    try {
      return parse_judge_scores(reply);
    } catch (const ParseError&) {
      if (attempt >= 1) throw;
      messages.push_back({ChatRole::kAssistant, std::move(reply)});
      messages.push_back({ChatRole::kUser, std::string(kJudgeReminder)});
    }
  }
}

}  // namespace

RubricScore make_rubric(const std::array<int, kDimensionCount>& values) {
  RubricScore score{values};
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    if (values[d] < 0 || values[d] > kDimensionMax[d]) {
      throw BoundViolationError(std::string(kDimensionCode[d]) + " score " +
                                std::to_string(values[d]) + " outside 0.." +
                                std::to_string(kDimensionMax[d]));
    }
  }
  return score;
}

bool within_bounds(const RubricScore& score) {
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    if (score.values[d] < 0 || score.values[d] > kDimensionMax[d]) return false;
  }
  return true;
}

void validate(const DimensionWeights& weights) {
  double sum = 0.0;
  for (double w : weights.w) {
    if (!(w >= 0.0)) throw PreconditionError("dimension weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw PreconditionError("dimension weights must sum to 1");
  }
}

RubricMeans trimmed_mean_panel(std::span<const RubricScore> panel) {
  if (panel.size() != kPanelSize) {
    throw PreconditionError("panel must have exactly 5 scores, got " +
                            std::to_string(panel.size()));
  }
  RubricMeans means;
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    std::array<int, kPanelSize> column{};
    for (std::size_t j = 0; j < kPanelSize; ++j) {
      if (!within_bounds(panel[j])) {
        throw PreconditionError("panel score out of bounds");
      }
      column[j] = panel[j].values[d];
    }
    means.values[d] = trimmed_mean(column);
  }
  return means;
}

std::string render_judge_prompt(std::string_view transcript,
                                std::string_view ground_truth,
                                std::string_view predicted) {
  return prompts::fill(prompts::kJudge,
                       {{"dialogue", std::string(transcript)},
                        {"prediction", std::string(predicted)},
                        {"diagnosis", std::string(ground_truth)}});
}

RubricScore parse_judge_scores(std::string_view text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    throw ParseError("judge reply has no JSON object");
  }
  json doc;
  try {
    doc = json::parse(text.substr(open, close - open + 1));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("judge reply is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("judge reply is not a JSON object");

  std::array<int, kDimensionCount> values{};
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    const std::string key(kJudgeKey[d]);
    auto it = doc.find(key);
    if (it == doc.end()) {
      throw MissingFieldError("judge reply lacks \"" + key + "\"");
    }
    if (it->is_number_integer()) {
      values[d] = it->get<int>();
    } else if (it->is_number_float()) {
      const double v = it->get<double>();
      if (v != std::floor(v)) {
        throw ParseError("judge score for \"" + key + "\" is not an integer");
      }
      values[d] = static_cast<int>(v);
    } else {
      throw ParseError("judge score for \"" + key + "\" is not a number");
    }
  }
  return make_rubric(values);
}

JudgePanelResult score_transcript(const SessionRecord& record,
                                  std::span<ChatBackend* const> judges,
                                  const DimensionWeights& weights) {
  validate(weights);
  if (judges.size() != kPanelSize) {
    throw PreconditionError("judge panel needs exactly 5 judges");
  }
  if (std::holds_alternative<ProtocolFailure>(record.outcome)) {
    throw PreconditionError("protocol-failure sessions are not scored");
  }
  const auto* diagnosed = std::get_if<Diagnosed>(&record.outcome);
  const std::string predicted =
      diagnosed ? diagnosed->disease : "(no diagnosis: timeout)";
  const std::string prompt = render_judge_prompt(
      serialize_history(record.history), record.truth.name, predicted);

  std::vector<std::future<RubricScore>> futures;
  for (ChatBackend* judge : judges) {
    if (!judge) throw PreconditionError("null judge backend");
    futures.push_back(std::async(std::launch::async, [judge, &prompt] {
      return ask_judge(*judge, prompt);
    }));
  }

  JudgePanelResult result;
  std::string failures;
  for (std::size_t j = 0; j < futures.size(); ++j) {
    try {
      result.per_judge.push_back(futures[j].get());
    } catch (const std::exception& e) {
      failures += "judge " + std::to_string(j + 1) + ": " + e.what() + "; ";
    }
  }
  if (!failures.empty()) throw PanelFailureError(failures);

  result.aggregated = trimmed_mean_panel(result.per_judge);
  result.dqs = dqs(result.aggregated, weights);
  result.timeout = diagnosed == nullptr;
  return result;
}

}  // namespace dxsim
