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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dxsim/cli.h"
#include "dxsim/records.h"
#include "test_support.h"

using namespace dxsim;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "dxsim_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kConfig =
    (testing::data_dir() / "examples/scripted_config.json").string();

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("scripted pipeline end to end") {
  const fs::path dir = fresh_dir("pipeline");
  const std::string cases = (dir / "cases.jsonl").string();
  const std::string run = (dir / "run.jsonl").string();
  const std::string judged = (dir / "judged.jsonl").string();

  auto gen = invoke({"gen-cases", "--config", kConfig, "--count", "4", "--out", cases});
  REQUIRE_MESSAGE(gen.code == kExitOk, gen.err);
  CHECK(load_cases(cases).size() == 4);

  auto ran = invoke({"run", "--config", kConfig, "--cases", cases, "--out", run});
  REQUIRE_MESSAGE(ran.code == kExitOk, ran.err);
  CHECK(load_records(run).size() == 4);

  auto judge = invoke({"judge", "--config", kConfig, "--run", run, "--out", judged});
  REQUIRE_MESSAGE(judge.code == kExitOk, judge.err);
  for (const auto& r : load_records(judged)) CHECK(r.panel.has_value());

  auto report = invoke({"report", "--runs", judged, "--out-dir", dir.string()});
  REQUIRE_MESSAGE(report.code == kExitOk, report.err);
  const std::string table = slurp(dir / "report.txt");
  CHECK(table.find("scripted-doctor") != std::string::npos);
  CHECK(table.find("DQS") != std::string::npos);
  CHECK(fs::exists(dir / "report.csv"));

  auto replay = invoke({"replay", "--run", judged});
  CHECK_MESSAGE(replay.code == kExitOk, replay.err);
}

TEST_CASE("gen-cases is reproducible for a fixed seed") {
  const fs::path dir = fresh_dir("seeded");
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    auto r = invoke({"gen-cases", "--config", kConfig, "--seed", "99", "--count",
                     "3", "--out", (dir / name).string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  }
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
}

TEST_CASE("an interrupted run resumes to the same file") {
  const fs::path dir = fresh_dir("resume");
  const std::string cases = (dir / "cases.jsonl").string();
  const fs::path full = dir / "full.jsonl";
  const fs::path partial = dir / "partial.jsonl";
  REQUIRE(invoke({"gen-cases", "--config", kConfig, "--count", "5", "--out", cases})
              .code == kExitOk);
  REQUIRE(invoke({"run", "--config", kConfig, "--cases", cases, "--out",
                  full.string(), "--parallelism", "3"})
              .code == kExitOk);

  auto records = load_records(full);
  REQUIRE(records.size() == 5);
  save_records(partial, {records[0], records[1]});
  auto resumed = invoke({"run", "--config", kConfig, "--cases", cases, "--out",
                         partial.string()});
  REQUIRE(resumed.code == kExitOk);
  CHECK(resumed.out.find("ran 3 sessions (2 already present)") != std::string::npos);
  CHECK(slurp(partial) == slurp(full));
}

TEST_CASE("exit codes") {
  const fs::path dir = fresh_dir("codes");
  CHECK(invoke({}).code == kExitUsage);
  CHECK(invoke({"frobnicate"}).code == kExitUsage);
  CHECK(invoke({"run", "--config", kConfig}).code == kExitUsage);
  CHECK(invoke({"replay", "--run", "/nonexistent/run.jsonl"}).code ==
        kExitMissingInput);
  CHECK(invoke({"run", "--config", "/nonexistent.json", "--cases", "x", "--out", "y"})
            .code == kExitMissingInput);

  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"knowledge_base": {"graph": "g.json", "encyclopedia": "e.json"},
              "t_max": 0})";
  }
  CHECK(invoke({"gen-cases", "--config", bad.string(), "--out",
                (dir / "c.jsonl").string()})
            .code == kExitBadConfig);

  const fs::path secret = dir / "secret.json";
  {
    std::ofstream out(secret);
    out << R"({"knowledge_base": {"graph": "g.json", "encyclopedia": "e.json"},
              "agents": {"doctor": {"model": "m", "api_key": "sk-123"}}})";
  }
  auto r = invoke({"gen-cases", "--config", secret.string(), "--out",
                   (dir / "c.jsonl").string()});
  CHECK(r.code == kExitBadConfig);
  CHECK(r.err.find("sk-123") == std::string::npos);
}

TEST_CASE("replay flags a tampered run file") {
  const fs::path dir = fresh_dir("tamper");
  auto records = load_records(testing::data_dir() / "golden/golden_run.jsonl");
  REQUIRE_FALSE(records.empty());
  records[0].positive_findings += 1;
  save_records(dir / "run.jsonl", records);
  CHECK(invoke({"replay", "--run", (dir / "run.jsonl").string()}).code ==
        kExitRuntime);
}

}
