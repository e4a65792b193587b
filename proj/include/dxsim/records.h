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

// JSON Lines persistence for case sets and run files.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dxsim/case_gen.h"
#include "dxsim/judge.h"
#include "dxsim/orchestrator.h"

namespace dxsim {

nlohmann::json to_json(const CaseProfile& profile);
CaseProfile case_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RubricScore& score);
RubricScore rubric_from_json(const nlohmann::json& j);

nlohmann::json to_json(const JudgePanelResult& panel);
JudgePanelResult panel_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DialogueHistory& history);
DialogueHistory history_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SessionRecord& record);
SessionRecord record_from_json(const nlohmann::json& j);

enum class LoadMode { kStrict, kLenient };

struct LoadWarning {
  std::size_t line = 0;  // 1-based
  std::string message;
};

/// Overwrites `path` with one record per line.
void save_records(const std::filesystem::path& path,
                  const std::vector<SessionRecord>& records);
/// Appends one line and flushes.
void append_record(const std::filesystem::path& path,
                   const SessionRecord& record);

/// Strict mode throws ParseError naming the first corrupt line. Lenient mode
/// skips corrupt lines and reports them in `warnings`. Blank lines are
/// ignored. A missing file throws NotFoundError.
std::vector<SessionRecord> load_records(const std::filesystem::path& path,
                                        LoadMode mode = LoadMode::kStrict,
                                        std::vector<LoadWarning>* warnings =
                                            nullptr);

void save_cases(const std::filesystem::path& path,
                const std::vector<CaseProfile>& cases);
std::vector<CaseProfile> load_cases(const std::filesystem::path& path);

}  // namespace dxsim
