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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Everything runs offline on scripted
// backends.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dxsim/cli.h"
#include "dxsim/error.h"
#include "dxsim/judge.h"
#include "dxsim/metrics.h"
#include "dxsim/orchestrator.h"
#include "dxsim/protocol.h"
#include "dxsim/report.h"
#include "test_support.h"

using namespace dxsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

/// Thrown by a check to fail its criterion with a message.
struct Failure {
  std::string message;
};

void expect(bool ok, const std::string& message) {
  if (!ok) throw Failure{message};
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// AC1 ----------------------------------------------------------------------

std::string golden_replay() {
  const std::vector<int> turns{15, 7, 8, 6};
  const std::vector<int> positive{8, 5, 1, 4};
  const std::vector<int> negative{16, 1, 12, 7};
  const std::vector<bool> correct{true, true, false, false};

  const auto cases = testing::golden_cases();
  expect(cases.size() == 4, "expected four case-study fixtures");
  const auto start = Clock::now();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& g = cases[i];
    const SessionRecord r = testing::run_golden(g);
    const auto* dx = std::get_if<Diagnosed>(&r.outcome);
    expect(dx != nullptr, g.name + ": session did not end in a diagnosis");
    expect(r.doctor_turns == turns[i],
           g.name + ": turns " + std::to_string(r.doctor_turns));
    expect(r.positive_findings == positive[i],
           g.name + ": positive " + std::to_string(r.positive_findings));
    expect(r.negative_findings == negative[i],
           g.name + ": negative " + std::to_string(r.negative_findings));
    expect(diagnosis_correct(dx->disease, r.truth) == correct[i],
           g.name + ": correctness mismatch for \"" + dx->disease + "\"");
  }
  const double elapsed = seconds_since(start);
  expect(elapsed < 1.0, "took " + fmt("%.3f s", elapsed));
  return "4 transcripts in " + fmt("%.3f s", elapsed);
}

// AC2 ----------------------------------------------------------------------

std::string dqs_fixtures() {
  const std::vector<std::array<int, 7>> dims{{6, 4, 18, 9, 8, 30, 6},
                                             {4, 2, 15, 10, 8, 25, 2},
                                             {2, 4, 5, 4, 8, 10, 2},
                                             {4, 6, 10, 6, 0, 4, 1}};
  const std::vector<double> want{81, 66, 35, 31};
  std::string got;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const double v = dqs(make_rubric(dims[i]));
    expect(v == want[i], "vector " + std::to_string(i + 1) + " gave " +
                             fmt("%.17g", v));
    got += (i ? ", " : "") + fmt("%.0f", v);
  }
  return "DQS " + got;
}

// AC3 ----------------------------------------------------------------------

std::string row_sums() {
  RubricMeans gemini;
  gemini.values = {5.2, 2.6, 18.1, 9.3, 8.0, 24.0, 2.7};
  RubricMeans mini;
  mini.values = {5.6, 2.9, 17.5, 8.9, 8.1, 22.5, 4.0};
  const double g = dqs(gemini);
  const double m = dqs(mini);
  expect(std::abs(g - 70.0) <= 0.5, "Gemini-2.5-Pro row gives " + fmt("%.4f", g));
  expect(std::abs(m - 69.5) < 1e-9, "GPT-5-mini row gives " + fmt("%.17g", m));
  return "Gemini-2.5-Pro " + fmt("%.1f", g) + " vs 70.0, GPT-5-mini " +
         fmt("%.1f", m) + " vs 69.5";
}

// AC4 ----------------------------------------------------------------------

std::string phr_cross_check() {
  const double ratio = 100.0 * phr_ratio_of_means(5.17, 2.22);
  const double printed = 69.93;
  expect(std::abs(ratio - printed) < 0.1,
         "ratio of means " + fmt("%.4f", ratio) + " is too far from 69.93");

  // The engine averages per-case rates. On skewed sessions the two modes
  // diverge, which is why the bound above is a tolerance and not equality.
  std::vector<SessionMetrics> sessions(2);
  sessions[0].positive = 1;
  sessions[0].phr = 1.0;
  sessions[1].positive = 1;
  sessions[1].negative = 3;
  sessions[1].phr = 0.25;
  const RunSummary s = summarize_run(sessions);
  expect(s.mean_phr == 0.625, "per-case PHR mean is " + fmt("%.17g", s.mean_phr));
  expect(phr_ratio_of_means(s.mean_positive, s.mean_negative) == 0.4,
         "ratio of means on the skewed fixture");
  return "ratio of means " + fmt("%.2f%%", ratio) + " vs per-case 69.93%, gap " +
         fmt("%.3f", std::abs(ratio - printed)) + " points";
}

// AC5 ----------------------------------------------------------------------

std::string trimmed_mean_properties() {
  std::mt19937_64 rng(5);
  constexpr int kTrials = 10000;
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<RubricScore> panel(kPanelSize);
    for (auto& s : panel) {
      for (std::size_t d = 0; d < kDimensionCount; ++d) {
        s.values[d] = std::uniform_int_distribution<int>(0, kDimensionMax[d])(rng);
      }
    }
    const RubricMeans got = trimmed_mean_panel(panel);

    std::vector<RubricScore> shuffled = panel;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    expect(trimmed_mean_panel(shuffled) == got,
           "not permutation invariant at trial " + std::to_string(trial));

    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      std::vector<int> column;
      for (const auto& s : panel) column.push_back(s.values[d]);
      std::sort(column.begin(), column.end());
      expect(got.values[d] >= column[1] && got.values[d] <= column[3],
             "outside the inner range at trial " + std::to_string(trial));
      column.erase(column.begin());
      column.pop_back();
      const double oracle =
          static_cast<double>(std::accumulate(column.begin(), column.end(), 0)) /
          static_cast<double>(column.size());
      expect(got.values[d] == oracle,
             "differs from sort-drop-average at trial " + std::to_string(trial));
    }
  }
  return std::to_string(kTrials) + " panels x 7 dimensions";
}

// AC6 ----------------------------------------------------------------------

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

std::string correlation_oracle() {
  const auto start = Clock::now();
  std::vector<double> base{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> perm = base;
  std::size_t count = 0;
  double worst = 0.0;
  do {
    double d2 = 0.0;
    for (std::size_t i = 0; i < 8; ++i) d2 += (base[i] - perm[i]) * (base[i] - perm[i]);
    const double oracle = 1.0 - 6.0 * d2 / (8.0 * (64.0 - 1.0));
    const double got = spearman(base, perm);
    worst = std::max(worst, std::abs(got - oracle));
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  expect(count == 40320, "enumerated " + std::to_string(count) + " permutations");
  expect(worst <= 1e-12, "Spearman error " + fmt("%.3g", worst));

  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> length(3, 60);
  double worst_p = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = length(rng);
    std::vector<double> x(n), y(n);
    const double mix = std::uniform_real_distribution<double>(-1, 1)(rng);
    for (int i = 0; i < n; ++i) {
      x[i] = normal(rng) * 10.0 + 3.0;
      y[i] = mix * x[i] + normal(rng);
    }
    worst_p = std::max(worst_p, std::abs(pearson(x, y) - pearson_oracle(x, y)));
  }
  expect(worst_p <= 1e-12, "Pearson error " + fmt("%.3g", worst_p));
  const double elapsed = seconds_since(start);
  expect(elapsed < 30.0, "took " + fmt("%.1f s", elapsed));
  return "max error Spearman " + fmt("%.2g", worst) + ", Pearson " +
         fmt("%.2g", worst_p) + " in " + fmt("%.2f s", elapsed);
}

// AC7 ----------------------------------------------------------------------

std::string findings_reply(std::mt19937_64& rng, const std::string& who, int index,
                           int& positive, int& negative) {
  std::string reply = who + " answer " + std::to_string(index) + ".";
  const int n = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int k = 0; k < n; ++k) {
    if (rng() % 2) {
      reply += " [!Positive!](" + who + "-pos-" + std::to_string(k) + ")";
      ++positive;
    } else {
      reply += "\n[!Negative!](" + who + "-neg-" + std::to_string(k) + ")";
      ++negative;
    }
  }
  return reply;
}

std::string orchestrator_properties() {
  std::mt19937_64 rng(7);
  int diagnosed = 0, timeouts = 0, at_limit = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string where = "session " + std::to_string(trial);
    SessionConfig config;
    config.t_max = std::uniform_int_distribution<int>(1, 12)(rng);
    // Diagnose on turn `diag_at`; past t_max means the session times out.
    const int diag_at = std::uniform_int_distribution<int>(1, config.t_max + 2)(rng);
    const int executed = std::min(diag_at, config.t_max);

    std::vector<std::string> doctor, patient{"My chest hurts."}, examiner;
    std::vector<ActionKind> kinds;
    int want_pos = 0, want_neg = 0;
    for (int turn = 1; turn <= executed; ++turn) {
      if (rng() % 10 == 0) doctor.push_back("I am not sure yet.");  // re-prompted
      if (turn == diag_at) {
        doctor.push_back(testing::doctor_reply("Diagnosis", "Angina"));
        kinds.push_back(ActionKind::kDiag);
        break;
      }
      if (rng() % 2) {
        doctor.push_back(testing::doctor_reply("Ask", "question " + std::to_string(turn)));
        kinds.push_back(ActionKind::kAsk);
        patient.push_back(
            findings_reply(rng, "patient", turn, want_pos, want_neg));
      } else {
        const char* tag = rng() % 2 ? "Test" : "Exam";
        doctor.push_back(testing::doctor_reply(tag, "exam " + std::to_string(turn)));
        kinds.push_back(ActionKind::kTest);
        examiner.push_back(
            findings_reply(rng, "examiner", turn, want_pos, want_neg));
      }
    }

    ScriptedBackend doc(doctor, "doctor"), pat(patient, "patient"),
        exa(examiner, "examiner");
    const SessionRecord r = run_session(testing::stub_profile(), {"d-x", "Angina", {}},
                                        {doc, pat, exa}, config);

    expect(r.doctor_turns >= 1 && r.doctor_turns <= config.t_max,
           where + ": " + std::to_string(r.doctor_turns) + " turns");
    expect(r.history.size() == static_cast<std::size_t>(r.doctor_turns) + 1,
           where + ": history length " + std::to_string(r.history.size()));
    expect(r.doctor_turns == executed, where + ": turn count");
    if (diag_at <= config.t_max) {
      const auto* dx = std::get_if<Diagnosed>(&r.outcome);
      expect(dx && dx->at_turn == diag_at, where + ": expected a diagnosis");
      ++diagnosed;
      if (diag_at == config.t_max) ++at_limit;
    } else {
      expect(std::holds_alternative<Timeout>(r.outcome), where + ": expected a timeout");
      ++timeouts;
    }

    const auto& turns = r.history.turns();
    for (std::size_t i = 1; i < turns.size(); ++i) {
      const ActionKind kind = turns[i].action->kind;
      expect(kind == kinds[i - 1], where + ": action order");
      const Speaker want = kind == ActionKind::kAsk    ? Speaker::kPatient
                           : kind == ActionKind::kTest ? Speaker::kExaminer
                                                       : Speaker::kDoctor;
      expect(turns[i].utterance.speaker == want, where + ": misrouted action");
      if (kind == ActionKind::kAsk) {
        expect(turns[i].utterance.text.rfind("patient answer", 0) == 0,
               where + ": Ask answered by the wrong agent");
      } else if (kind == ActionKind::kTest) {
        expect(turns[i].utterance.text.rfind("examiner answer", 0) == 0,
               where + ": Test answered by the wrong agent");
      }
    }
    expect(pat.cursor() == pat.size() && exa.cursor() == exa.size(),
           where + ": environment call counts");
    expect(r.positive_findings == want_pos && r.negative_findings == want_neg,
           where + ": finding tallies");
  }
  expect(at_limit > 0, "no session diagnosed exactly at t_max");
  return "1000 sessions (" + std::to_string(diagnosed) + " diagnosed, " +
         std::to_string(at_limit) + " at t_max, " + std::to_string(timeouts) +
         " timeouts)";
}

// AC8 ----------------------------------------------------------------------

std::string protocol_fuzz() {
  static const std::vector<std::string> kPieces{
      "[!Ask!](", "[!Test!](", "[!Exam!](", "[!Diagnosis!](", "[!Diag!](",
      "[!Positive!](", "[!ask!](", "[!", "!]", "(", ")", "]", "[", "!",
      "Thought:", "Action:", "**Action:**", "\n", " ", "cough", "x-ray",
      "(left)", "\t", "\xC3\xA9", "\"", "{}", "[!Ask!]()", ")))"};
  std::mt19937_64 rng(8);
  std::size_t accepted = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::string text;
    const int n = std::uniform_int_distribution<int>(0, 14)(rng);
    for (int i = 0; i < n; ++i) text += kPieces[rng() % kPieces.size()];
    if (rng() % 4 == 0) {
      const std::size_t len = rng() % 12;
      for (std::size_t i = 0; i < len; ++i) text += static_cast<char>(rng() % 256);
    }
    try {
      const DoctorReply r = parse_doctor_reply(text);
      ++accepted;
      expect(!r.action.payload.empty(), "accepted an empty payload: " + text);
      expect(r.action.marker != "Exam" || r.action.kind == ActionKind::kTest,
             "Exam not read as Test: " + text);
    } catch (const ProtocolError&) {
    } catch (const std::exception& e) {
      throw Failure{"unexpected exception on fuzz input: " + std::string(e.what())};
    }
  }

  auto kind_of = [](const std::string& text) -> std::optional<ProtocolErrorKind> {
    try {
      parse_doctor_reply(text);
      return std::nullopt;
    } catch (const ProtocolError& e) {
      return e.kind();
    }
  };
  const std::vector<std::string> tags{"Ask", "Test", "Exam", "Diagnosis"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string a = tags[rng() % tags.size()], b = tags[rng() % tags.size()];
    const std::string sep = rng() % 2 ? " " : "\n";
    const std::string two = "Thought: t\nAction: [!" + a + "!](p1)" + sep + "[!" + b + "!](p2)";
    expect(kind_of(two) == ProtocolErrorKind::kMultipleActions,
           "multi-action input accepted: " + two);
    const std::string bare = "Thought: I would ask about " + std::to_string(rng()) + " (fever)";
    expect(kind_of(bare) == ProtocolErrorKind::kNoAction, "unmarked input accepted");
  }
  const DoctorReply exam = parse_doctor_reply("Thought: look\nAction: [!Exam!](chest X-ray (PA))");
  expect(exam.action.kind == ActionKind::kTest && exam.action.marker == "Exam" &&
             exam.action.payload == "chest X-ray (PA)",
         "[!Exam!] not parsed as a Test action");
  return "10000 fuzz inputs (" + std::to_string(accepted) +
         " accepted), multi-action and unmarked inputs rejected, Exam read as Test";
}

// AC9 ----------------------------------------------------------------------

int cli(std::vector<std::string> args, std::string* err_out = nullptr) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  if (err_out) *err_out = err.str();
  return code;
}

std::string scripted_pipeline() {
  const fs::path dir = fs::temp_directory_path() / "dxsim_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string config = (testing::data_dir() / "examples/scripted_config.json").string();
  const std::string cases = (dir / "cases.jsonl").string();
  std::string err;

  expect(cli({"gen-cases", "--config", config, "--out", cases}, &err) == 0,
         "gen-cases failed: " + err);
  std::vector<std::string> judged;
  for (int run = 1; run <= 2; ++run) {
    const std::string raw = (dir / ("run-" + std::to_string(run) + ".jsonl")).string();
    const std::string scored = (dir / ("judged-" + std::to_string(run) + ".jsonl")).string();
    expect(cli({"run", "--config", config, "--cases", cases, "--out", raw}, &err) == 0,
           "run failed: " + err);
    expect(cli({"judge", "--config", config, "--run", raw, "--out", scored}, &err) == 0,
           "judge failed: " + err);
    judged.push_back(scored);
  }
  expect(cli({"report", "--runs", judged[0], judged[1], "--out-dir", dir.string()},
             &err) == 0,
         "report failed: " + err);

  std::ifstream in(dir / "report.txt");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  expect(!lines.empty(), "empty report");
  for (const auto& column : report_columns()) {
    expect(lines[0].find(column) != std::string::npos, "missing column " + column);
  }
  const auto row = std::find_if(lines.begin(), lines.end(), [](const std::string& l) {
    return l.rfind("scripted-doctor", 0) == 0;
  });
  expect(row != lines.end(), "no row for the scripted doctor");
  std::size_t cells = 0;
  for (std::size_t p = row->find("\xC2\xB1"); p != std::string::npos;
       p = row->find("\xC2\xB1", p + 1)) {
    ++cells;
  }
  expect(cells == report_columns().size(),
         std::to_string(cells) + " of 13 cells carry mean ± SE");
  expect(cli({"replay", "--run", judged[0]}, &err) == 0, "replay failed: " + err);
  return "13 columns with mean ± SE, replay exit 0";
}

// AC10 ---------------------------------------------------------------------

double spearman_positions_oracle(const Ranking& a, const Ranking& b) {
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (a[i].model == b[j].model) {
        const double d = static_cast<double>(i) - static_cast<double>(j);
        d2 += d * d;
      }
    }
  }
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

std::string rank_sensitivity() {
  // Accuracy per model under three judge-panel variants.
  const std::vector<std::string> models{"m-alpha", "m-bravo", "m-charlie", "m-delta",
                                        "m-echo",  "m-fox",   "m-golf"};
  const std::vector<std::vector<double>> fixtures{
      {0.72, 0.70, 0.68, 0.66, 0.61, 0.55, 0.40},
      {0.71, 0.72, 0.66, 0.67, 0.60, 0.54, 0.42},
      {0.73, 0.69, 0.65, 0.68, 0.62, 0.50, 0.41}};
  std::vector<Ranking> rankings;
  for (const auto& values : fixtures) {
    std::map<std::string, AggregateSummary> summaries;
    for (std::size_t i = 0; i < models.size(); ++i) {
      AggregateSummary s;
      s.accuracy = {values[i], 0.01};
      summaries[models[i]] = s;
    }
    rankings.push_back(rank_models(summaries, "accuracy"));
  }
  std::string out = "rho";
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    for (std::size_t j = i + 1; j < rankings.size(); ++j) {
      const double got = rank_agreement(rankings[i], rankings[j]);
      const double oracle = spearman_positions_oracle(rankings[i], rankings[j]);
      expect(std::abs(got - oracle) <= 1e-12,
             "pair " + std::to_string(i) + "/" + std::to_string(j) + " gave " +
                 fmt("%.6f", got) + ", oracle " + fmt("%.6f", oracle));
      out += " " + std::to_string(i + 1) + "-" + std::to_string(j + 1) + "=" +
             fmt("%.3f", got);
    }
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
      {"AC1 golden transcript replay", golden_replay},
      {"AC2 DQS fixtures", dqs_fixtures},
      {"AC3 rubric row sums", row_sums},
      {"AC4 PHR aggregation modes", phr_cross_check},
      {"AC5 trimmed mean properties", trimmed_mean_properties},
      {"AC6 correlation oracle", correlation_oracle},
      {"AC7 orchestrator properties", orchestrator_properties},
      {"AC8 protocol fuzz", protocol_fuzz},
      {"AC9 scripted pipeline", scripted_pipeline},
      {"AC10 rank sensitivity", rank_sensitivity},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    std::string detail;
    bool ok = false;
    try {
      detail = check();
      ok = true;
    } catch (const Failure& f) {
      detail = f.message;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failed;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed")
            << '\n';
  return failed == 0 ? 0 : 1;
}
