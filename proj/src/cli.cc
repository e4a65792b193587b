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

#include "dxsim/cli.h"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "dxsim/case_gen.h"
#include "dxsim/error.h"
#include "dxsim/kb.h"
#include "dxsim/metrics.h"
#include "dxsim/orchestrator.h"
#include "dxsim/records.h"
#include "dxsim/report.h"

namespace dxsim {

namespace fs = std::filesystem;

namespace {

struct MissingInput : Error {
  using Error::Error;
};

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::string case_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case-%04zu", index + 1);
  return buf;
}

const BackendSpec& require_spec(const std::optional<BackendSpec>& spec,
                                const char* role) {
  if (!spec) throw ConfigError(std::string("config has no ") + role + " agent");
  return *spec;
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw MissingInput("no such file: " + path.string());
}

int gen_cases(const fs::path& config_path, std::optional<std::uint64_t> seed,
              std::optional<int> count, const fs::path& out_path,
              std::ostream& out, std::ostream& err) {
  require_file(config_path);
  const RunConfig config = load_run_config(config_path);
  BackendPool generator(require_spec(config.generator, "generator"));
  const KnowledgeBase kb =
      load_knowledge_base(config.graph_path, config.encyclopedia_path);
  const std::uint64_t base_seed = seed.value_or(config.seed);
  const std::size_t n = static_cast<std::size_t>(count.value_or(config.case_count));

  std::vector<std::optional<CaseProfile>> cases(n);
  std::mutex err_mu;
  std::size_t rejected = 0;
  parallel_for(n, config.parallelism, [&](std::size_t i) {
    const DiseaseNode& disease = sample_disease(kb.graph, case_seed(base_seed, i));
    auto backend = generator.acquire(disease.id);
    try {
      CaseProfile profile = generate_case_for(kb, disease, *backend);
      profile.case_id = case_id(i);
      cases[i] = std::move(profile);
    } catch (const CaseValidationError& e) {
      std::lock_guard lock(err_mu);
      ++rejected;
      err << "warning: " << case_id(i) << " dropped: " << e.what() << '\n';
    }
  });

  std::vector<CaseProfile> accepted;
  for (auto& c : cases) {
    if (c) accepted.push_back(std::move(*c));
  }
  if (accepted.empty()) throw Error("no case passed validation");
  save_cases(out_path, accepted);
  out << "wrote " << accepted.size() << " cases to " << out_path.string();
  if (rejected > 0) out << " (" << rejected << " rejected)";
  out << '\n';
  return kExitOk;
}

int run_sessions(const fs::path& config_path, const fs::path& cases_path,
                 const fs::path& out_path, std::optional<int> parallelism,
                 std::ostream& out) {
  require_file(config_path);
  require_file(cases_path);
  const RunConfig config = load_run_config(config_path);
  BackendPool doctor(require_spec(config.doctor, "doctor"));
  BackendPool patient(require_spec(config.patient, "patient"));
  BackendPool examiner(require_spec(config.examiner, "examiner"));
  const KnowledgeBase kb =
      load_knowledge_base(config.graph_path, config.encyclopedia_path);

  std::set<std::string> done;
  if (fs::exists(out_path)) {
    for (const auto& r : load_records(out_path, LoadMode::kLenient)) {
      done.insert(r.case_id);
    }
  }

  std::vector<SessionCase> todo;
  for (auto& profile : load_cases(cases_path)) {
    if (done.contains(profile.case_id)) continue;
    DiagnosisKey truth = DiagnosisKey::from(kb.graph.at(profile.disease_id));
    todo.push_back({std::move(profile), std::move(truth)});
  }

  SessionConfig session;
  session.t_max = config.t_max;
  session.malformed_reply_retries = config.malformed_reply_retries;
  session.seed = config.seed;

  AgentFactory factory = [&](const SessionCase& c) {
    const std::string& key = c.profile.disease_id;
    return SessionAgents{doctor.acquire(key), patient.acquire(key),
                         examiner.acquire(key)};
  };

  // Sessions finish out of order; append them in input order so an
  // interrupted run leaves a clean prefix behind.
  std::map<std::size_t, SessionRecord> pending;
  std::size_t next = 0;
  std::map<std::string, int> status_counts;
  RecordSink sink = [&](std::size_t index, const SessionRecord& record) {
    pending.emplace(index, record);
    while (!pending.empty() && pending.begin()->first == next) {
      append_record(out_path, pending.begin()->second);
      ++status_counts[std::string(outcome_status(pending.begin()->second.outcome))];
      pending.erase(pending.begin());
      ++next;
    }
  };
  run_batch(todo, factory, session, parallelism.value_or(config.parallelism),
            sink);

  out << "ran " << todo.size() << " sessions";
  if (!done.empty()) out << " (" << done.size() << " already present)";
  out << ": " << status_counts["diagnosed"] << " diagnosed, "
      << status_counts["timeout"] << " timeout, "
      << status_counts["protocol_failure"] << " protocol failure\n";
  return kExitOk;
}

int judge_run(const fs::path& config_path, const fs::path& run_path,
              const fs::path& out_path, std::ostream& out) {
  require_file(config_path);
  require_file(run_path);
  const RunConfig config = load_run_config(config_path);
  if (config.judges.size() != kPanelSize) {
    throw ConfigError("config has no judge panel");
  }
  std::vector<BackendPool> pools;
  for (const auto& spec : config.judges) pools.emplace_back(spec);

  std::vector<SessionRecord> records = load_records(run_path);
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::mutex mu;
  parallel_for(records.size(), config.parallelism, [&](std::size_t i) {
    SessionRecord& r = records[i];
    if (std::holds_alternative<ProtocolFailure>(r.outcome) || r.panel) return;
    std::vector<std::shared_ptr<ChatBackend>> held;
    std::vector<ChatBackend*> judges;
    for (auto& pool : pools) {
      held.push_back(pool.acquire(r.truth.disease_id));
      judges.push_back(held.back().get());
    }
    try {
      r.panel = score_transcript(r, judges);
      r.panel_failure.reset();
      std::lock_guard lock(mu);
      ++scored;
    } catch (const PanelFailureError& e) {
      r.panel_failure = e.what();
      std::lock_guard lock(mu);
      ++failed;
    }
  });
  save_records(out_path, records);
  out << "scored " << scored << " transcripts";
  if (failed > 0) out << ", " << failed << " panel failures";
  out << '\n';
  return kExitOk;
}

std::vector<fs::path> expand(const std::vector<std::string>& patterns) {
  std::vector<fs::path> files;
  for (const auto& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) {
      throw MissingInput("no run files match " + pattern);
    }
    if (rc != 0) throw Error("cannot expand " + pattern);
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  return files;
}

int report_runs(const std::vector<std::string>& patterns,
                const fs::path& out_dir, std::ostream& out) {
  std::vector<std::vector<SessionRecord>> runs;
  std::size_t excluded = 0;
  std::size_t sessions = 0;
  for (const auto& file : expand(patterns)) {
    runs.push_back(load_records(file));
    for (const auto& r : runs.back()) {
      ++sessions;
      if (!std::holds_alternative<Diagnosed>(r.outcome)) ++excluded;
    }
  }
  const auto models = aggregate_run_files(runs);
  const Report report = emit_report(models);

  std::string notes;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%zu run file(s), %zu sessions; %zu without a diagnosis are "
                "counted as incorrect and left out of the efficiency means.\n",
                runs.size(), sessions, excluded);
  notes += buf;
  for (const auto& [model, m] : models) {
    if (!m.panel || std::isnan(m.panel->dqs_without_timeouts.mean)) continue;
    std::snprintf(buf, sizeof buf, "%s: DQS over diagnosed transcripts only %.2f\n",
                  model.c_str(), m.panel->dqs_without_timeouts.mean);
    notes += buf;
  }

  fs::create_directories(out_dir);
  std::ofstream(out_dir / "report.txt") << report.table << '\n' << notes;
  std::ofstream(out_dir / "report.csv") << report.csv;
  out << report.table << '\n' << notes;
  return kExitOk;
}

bool same_session(const SessionRecord& a, const SessionRecord& b) {
  return a.outcome == b.outcome && a.history == b.history &&
         a.doctor_turns == b.doctor_turns &&
         a.positive_findings == b.positive_findings &&
         a.negative_findings == b.negative_findings;
}

int replay_run(const fs::path& run_path, std::ostream& out, std::ostream& err) {
  require_file(run_path);
  const auto records = load_records(run_path);
  std::size_t mismatches = 0;
  for (const auto& r : records) {
    const SessionRecord again = replay_session(r);
    if (!same_session(r, again)) {
      ++mismatches;
      err << "mismatch: " << r.case_id << " (" << r.model << "): stored "
          << outcome_status(r.outcome) << " after " << r.doctor_turns
          << " turns, replayed " << outcome_status(again.outcome) << " after "
          << again.doctor_turns << " turns\n";
    }
  }
  out << "replayed " << records.size() << " sessions, " << mismatches
      << " mismatches\n";
  return mismatches == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Simulated diagnostic dialogue benchmark"};
  app.name("dxsim");
  app.require_subcommand(1);

  std::string config, cases, run, out_file, out_dir;
  std::vector<std::string> runs;
  std::optional<std::uint64_t> seed;
  std::optional<int> count, parallelism;

  auto* gen = app.add_subcommand("gen-cases", "Generate validated patient cases");
  gen->add_option("--config", config, "Run config (JSON)")->required();
  gen->add_option("--seed", seed, "Base seed (defaults to the config seed)");
  gen->add_option("--count", count, "Number of cases (defaults to case_count)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", out_file, "Output case file (JSONL)")->required();

  auto* run_cmd = app.add_subcommand("run", "Run dialogue sessions over a case set");
  run_cmd->add_option("--config", config, "Run config (JSON)")->required();
  run_cmd->add_option("--cases", cases, "Case file (JSONL)")->required();
  run_cmd->add_option("--out", out_file, "Run file to append to (JSONL)")->required();
  run_cmd->add_option("--parallelism", parallelism, "Concurrent sessions")
      ->check(CLI::PositiveNumber);

  auto* judge = app.add_subcommand("judge", "Score a run file with the judge panel");
  judge->add_option("--config", config, "Run config (JSON)")->required();
  judge->add_option("--run", run, "Run file (JSONL)")->required();
  judge->add_option("--out", out_file, "Scored run file (JSONL)")->required();

  auto* report = app.add_subcommand("report", "Aggregate run files into a table");
  report->add_option("--runs", runs, "Run files or glob patterns, one per run")
      ->required();
  report->add_option("--out-dir", out_dir, "Where report.txt/report.csv go")
      ->required();

  auto* replay = app.add_subcommand("replay", "Re-run recorded sessions offline");
  replay->add_option("--run", run, "Run file (JSONL)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return gen_cases(config, seed, count, out_file, out, err);
    if (run_cmd->parsed()) {
      return run_sessions(config, cases, out_file, parallelism, out);
    }
    if (judge->parsed()) return judge_run(config, run, out_file, out);
    if (report->parsed()) return report_runs(runs, out_dir, out);
    if (replay->parsed()) return replay_run(run, out, err);
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dxsim
