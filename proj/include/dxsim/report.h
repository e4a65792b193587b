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

// Run configuration and report emission.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dxsim/error.h"
#include "dxsim/llm.h"
#include "dxsim/metrics.h"
#include "dxsim/orchestrator.h"

namespace dxsim {

/// How to build one agent backend. "http" backends are built once and
/// shared; "scripted" backends are built fresh per session (or per case /
/// transcript), optionally choosing a script by key.
struct BackendSpec {
  std::string type = "http";
  BackendConfig http;
  std::string model_id;
  std::vector<std::string> replies;
  /// key -> replies; "*" is the fallback.
  std::map<std::string, std::vector<std::string>> scripts;
};

BackendSpec backend_spec_from_json(const nlohmann::json& j);

/// Hands out backends for a spec. Thread-safe.
class BackendPool {
 public:
  explicit BackendPool(BackendSpec spec);

  /// `key` selects a script for keyed scripted specs (a disease id for the
  /// generator and session agents).
  std::shared_ptr<ChatBackend> acquire(const std::string& key = {});
  const BackendSpec& spec() const { return spec_; }

 private:
  BackendSpec spec_;
  std::shared_ptr<ChatBackend> shared_;
};

/// Thrown for structurally invalid run configurations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::filesystem::path graph_path;
  std::filesystem::path encyclopedia_path;
  int case_count = 300;
  int run_count = 5;
  int t_max = 15;
  int malformed_reply_retries = 1;
  int parallelism = 4;
  std::uint64_t seed = 0;
  std::optional<BackendSpec> doctor;
  std::optional<BackendSpec> patient;
  std::optional<BackendSpec> examiner;
  std::optional<BackendSpec> generator;
  std::vector<BackendSpec> judges;
  std::filesystem::path output_dir = ".";
};

/// Relative KB paths resolve against `base_dir`. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// One table row: efficiency aggregates and, if judged, panel aggregates.
struct ModelAggregates {
  AggregateSummary efficiency;
  std::optional<PanelAggregate> panel;
};

/// Groups records by model; each input file is one run.
std::map<std::string, ModelAggregates> aggregate_run_files(
    const std::vector<std::vector<SessionRecord>>& runs);

struct Report {
  std::string table;
  std::string csv;
};

/// One row per model sorted by accuracy (descending, ties by name). Values
/// print as mean ± SE with two decimals; the CSV carries full precision.
Report emit_report(const std::map<std::string, AggregateSummary>& aggregates,
                   const std::map<std::string, PanelAggregate>& panels);

Report emit_report(const std::map<std::string, ModelAggregates>& models);

/// Column headers of the table (model name excluded).
const std::vector<std::string>& report_columns();

}  // namespace dxsim
