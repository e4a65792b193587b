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

#include "dxsim/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace dxsim {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key \"" + key + "\" in " + std::string(where));
    }
  }
}

template <typename T>
T read_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string format_full(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell(const MeanSe& m, double scale) {
  if (std::isnan(m.mean)) return "n/a";
  std::string s = format_fixed(m.mean * scale);
  if (!std::isnan(m.se)) s += " \xC2\xB1 " + format_fixed(m.se * scale);
  return s;
}

std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string pad(std::string_view s, std::size_t width, bool left) {
  const std::size_t w = display_width(s);
  std::string fill(width > w ? width - w : 0, ' ');
  return left ? std::string(s) + fill : fill + std::string(s);
}

// The row's cells in report_columns() order, with their scale.
std::vector<std::pair<MeanSe, double>> row_values(const ModelAggregates& m) {
  const MeanSe none{std::nan(""), std::nan("")};
  std::vector<std::pair<MeanSe, double>> v{
      {m.efficiency.accuracy, 100.0}, {m.efficiency.turns, 1.0},
      {m.efficiency.positive, 1.0},   {m.efficiency.negative, 1.0},
      {m.efficiency.phr, 100.0},
  };
  v.emplace_back(m.panel ? m.panel->dqs : none, 1.0);
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    v.emplace_back(m.panel ? m.panel->dims[d] : none, 1.0);
  }
  return v;
}

}  // namespace

BackendSpec backend_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("backend spec must be an object");
  for (const char* secret : {"api_key", "key", "token", "secret"}) {
    if (j.contains(secret)) {
      throw ConfigError(std::string("backend spec must not hold \"") + secret +
                        "\"; name an environment variable in credential_env");
    }
  }
  reject_unknown_keys(j,
                      {"type", "provider", "endpoint", "model", "credential_env",
                       "max_retries", "timeout_s", "max_in_flight", "replies",
                       "scripts"},
                      "backend spec");
  BackendSpec spec;
  spec.type = read_or<std::string>(j, "type", "http");
  spec.model_id = read_or<std::string>(j, "model", "");
  if (spec.type == "http") {
    spec.http.provider = read_or<std::string>(j, "provider", "openai");
    spec.http.endpoint = read_or<std::string>(j, "endpoint", "");
    spec.http.model_id = spec.model_id;
    spec.http.credential_env_var = read_or<std::string>(j, "credential_env", "");
    spec.http.max_retries = read_or<int>(j, "max_retries", 3);
    spec.http.timeout = std::chrono::seconds(read_or<int>(j, "timeout_s", 60));
    spec.http.max_in_flight = read_or<int>(j, "max_in_flight", 4);
    try {
      validate(spec.http);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("backend ") + spec.model_id + ": " +
                        e.what());
    }
  } else if (spec.type == "scripted") {
    spec.replies = read_or<std::vector<std::string>>(j, "replies", {});
    spec.scripts =
        read_or<std::map<std::string, std::vector<std::string>>>(j, "scripts",
                                                                  {});
    if (spec.replies.empty() && spec.scripts.empty()) {
      throw ConfigError("scripted backend " + spec.model_id +
                        " has no replies");
    }
    if (spec.model_id.empty()) spec.model_id = "scripted";
  } else {
    throw ConfigError("unknown backend type \"" + spec.type + "\"");
  }
  if (spec.model_id.empty()) throw ConfigError("backend spec needs a model");
  return spec;
}

BackendPool::BackendPool(BackendSpec spec) : spec_(std::move(spec)) {
  if (spec_.type == "http") shared_ = std::make_shared<HttpBackend>(spec_.http);
}

std::shared_ptr<ChatBackend> BackendPool::acquire(const std::string& key) {
  if (shared_) return shared_;
  const std::vector<std::string>* replies = nullptr;
  if (auto it = spec_.scripts.find(key); it != spec_.scripts.end()) {
    replies = &it->second;
  } else if (auto any = spec_.scripts.find("*"); any != spec_.scripts.end()) {
    replies = &any->second;
  } else if (!spec_.replies.empty()) {
    replies = &spec_.replies;
  }
  if (!replies) {
    throw NotFoundError("no script for \"" + key + "\" in backend " +
                        spec_.model_id);
  }
  return std::make_shared<ScriptedBackend>(*replies, spec_.model_id);
}

RunConfig run_config_from_json(const json& j,
                               const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  reject_unknown_keys(j,
                      {"knowledge_base", "case_count", "run_count", "t_max",
                       "malformed_reply_retries", "parallelism", "seed",
                       "agents", "judges", "output_dir"},
                      "run config");
  RunConfig c;
  if (!j.contains("knowledge_base")) {
    throw ConfigError("run config needs \"knowledge_base\"");
  }
  const json& kb = j.at("knowledge_base");
  if (!kb.is_object()) throw ConfigError("\"knowledge_base\" must be an object");
  reject_unknown_keys(kb, {"graph", "encyclopedia"}, "knowledge_base");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  const auto graph = read_or<std::string>(kb, "graph", "");
  const auto enc = read_or<std::string>(kb, "encyclopedia", "");
  if (graph.empty() || enc.empty()) {
    throw ConfigError("knowledge_base needs \"graph\" and \"encyclopedia\"");
  }
  c.graph_path = resolve(graph);
  c.encyclopedia_path = resolve(enc);

  c.case_count = read_or(j, "case_count", c.case_count);
  c.run_count = read_or(j, "run_count", c.run_count);
  c.t_max = read_or(j, "t_max", c.t_max);
  c.malformed_reply_retries =
      read_or(j, "malformed_reply_retries", c.malformed_reply_retries);
  c.parallelism = read_or(j, "parallelism", c.parallelism);
  c.seed = read_or(j, "seed", c.seed);
  c.output_dir = resolve(read_or<std::string>(j, "output_dir", "."));
  if (c.case_count < 1) throw ConfigError("case_count must be >= 1");
  if (c.run_count < 1) throw ConfigError("run_count must be >= 1");
  if (c.t_max < 1) throw ConfigError("t_max must be >= 1");
  if (c.malformed_reply_retries < 0) {
    throw ConfigError("malformed_reply_retries must be >= 0");
  }
  if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");

  if (j.contains("agents")) {
    const json& agents = j.at("agents");
    if (!agents.is_object()) throw ConfigError("\"agents\" must be an object");
    reject_unknown_keys(agents, {"doctor", "patient", "examiner", "generator"},
                        "agents");
    auto slot = [&](const char* name, std::optional<BackendSpec>& out) {
      if (agents.contains(name)) out = backend_spec_from_json(agents.at(name));
    };
    slot("doctor", c.doctor);
    slot("patient", c.patient);
    slot("examiner", c.examiner);
    slot("generator", c.generator);
  }
  if (j.contains("judges")) {
    const json& judges = j.at("judges");
    if (!judges.is_array()) throw ConfigError("\"judges\" must be an array");
    for (const auto& spec : judges) {
      c.judges.push_back(backend_spec_from_json(spec));
    }
    if (c.judges.size() != kPanelSize) {
      throw ConfigError("the judge panel needs exactly 5 judges, got " +
                        std::to_string(c.judges.size()));
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

std::map<std::string, ModelAggregates> aggregate_run_files(
    const std::vector<std::vector<SessionRecord>>& runs) {
  std::map<std::string, std::vector<RunSummary>> efficiency;
  std::map<std::string, std::vector<PanelRunSummary>> panels;
  for (const auto& run : runs) {
    std::map<std::string, std::vector<SessionRecord>> by_model;
    for (const auto& r : run) by_model[r.model].push_back(r);
    for (const auto& [model, records] : by_model) {
      std::vector<SessionMetrics> metrics;
      for (const auto& r : records) metrics.push_back(session_metrics(r));
      efficiency[model].push_back(summarize_run(metrics));
      if (auto p = summarize_panels(records)) panels[model].push_back(*p);
    }
  }
  std::map<std::string, ModelAggregates> out;
  for (const auto& [model, summaries] : efficiency) {
    ModelAggregates m;
    m.efficiency = summaries.size() == 1 ? single_run_aggregate(summaries[0])
                                         : aggregate_runs(summaries);
    if (auto it = panels.find(model); it != panels.end()) {
      m.panel = aggregate_panels(it->second);
    }
    out.emplace(model, std::move(m));
  }
  return out;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> kColumns = [] {
    std::vector<std::string> c{"Acc.", "Tot. Turns", "Pos. Find.",
                               "Neg. Find.", "PHR", "DQS"};
    for (auto code : kDimensionCode) c.emplace_back(code);
    return c;
  }();
  return kColumns;
}

Report emit_report(const std::map<std::string, AggregateSummary>& aggregates,
                   const std::map<std::string, PanelAggregate>& panels) {
  std::map<std::string, ModelAggregates> models;
  for (const auto& [model, a] : aggregates) {
    ModelAggregates m{a, std::nullopt};
    if (auto it = panels.find(model); it != panels.end()) m.panel = it->second;
    models.emplace(model, std::move(m));
  }
  return emit_report(models);
}

Report emit_report(const std::map<std::string, ModelAggregates>& models) {
  std::vector<const std::pair<const std::string, ModelAggregates>*> rows;
  for (const auto& entry : models) rows.push_back(&entry);
  std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) {
    const double x = a->second.efficiency.accuracy.mean;
    const double y = b->second.efficiency.accuracy.mean;
    if (x != y) return x > y;
    return a->first < b->first;
  });

  const auto& columns = report_columns();
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Model"});
  for (const auto& c : columns) grid.back().push_back(c);
  std::string csv = "model";
  for (const auto& c : columns) csv += "," + c + " mean," + c + " se";
  csv += '\n';

  for (const auto* row : rows) {
    std::vector<std::string> line{row->first};
    std::string csv_line = row->first;
    for (const auto& [value, scale] : row_values(row->second)) {
      line.push_back(cell(value, scale));
      csv_line += "," + format_full(value.mean * scale) + "," +
                  format_full(value.se * scale);
    }
    grid.push_back(std::move(line));
    csv += csv_line + '\n';
  }

  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      widths[i] = std::max(widths[i], display_width(line[i]));
    }
  }
  std::string table;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      if (i > 0) table += "  ";
      table += pad(grid[r][i], widths[i], i == 0);
    }
    while (!table.empty() && table.back() == ' ') table.pop_back();
    table += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      table += std::string(total + 2 * (widths.size() - 1), '-') + '\n';
    }
  }
  return {table, csv};
}

}  // namespace dxsim
