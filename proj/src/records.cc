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

#include "dxsim/records.h"

#include <fstream>

#include "dxsim/error.h"

namespace dxsim {

using nlohmann::json;

namespace {

ActionKind action_kind_from(const std::string& s) {
  if (s == "Ask") return ActionKind::kAsk;
  if (s == "Test") return ActionKind::kTest;
  if (s == "Diag") return ActionKind::kDiag;
  throw ParseError("unknown action kind \"" + s + "\"");
}

Speaker speaker_from(const std::string& s) {
  if (s == "patient") return Speaker::kPatient;
  if (s == "examiner") return Speaker::kExaminer;
  if (s == "doctor") return Speaker::kDoctor;
  throw ParseError("unknown speaker \"" + s + "\"");
}

json utterance_json(const Utterance& u) {
  json findings = json::array();
  for (const auto& f : u.findings) {
    findings.push_back(
        {{"polarity", f.polarity == Polarity::kPositive ? "positive" : "negative"},
         {"text", f.text}});
  }
  return {{"speaker", to_string(u.speaker)},
          {"text", u.text},
          {"findings", std::move(findings)}};
}

Utterance utterance_from(const json& j) {
  Utterance u;
  u.speaker = speaker_from(j.at("speaker").get<std::string>());
  u.text = j.at("text").get<std::string>();
  for (const auto& f : j.value("findings", json::array())) {
    const auto polarity = f.at("polarity").get<std::string>();
    if (polarity != "positive" && polarity != "negative") {
      throw ParseError("unknown finding polarity \"" + polarity + "\"");
    }
    u.findings.push_back({polarity == "positive" ? Polarity::kPositive
                                                 : Polarity::kNegative,
                          f.at("text").get<std::string>()});
  }
  return u;
}

json outcome_json(const SessionOutcome& outcome) {
  json j{{"status", outcome_status(outcome)}};
  if (const auto* d = std::get_if<Diagnosed>(&outcome)) {
    j["disease"] = d->disease;
    j["at_turn"] = d->at_turn;
  } else if (const auto* f = std::get_if<ProtocolFailure>(&outcome)) {
    j["reason"] = f->reason;
  }
  return j;
}

SessionOutcome outcome_from(const json& j) {
  const auto status = j.at("status").get<std::string>();
  if (status == "diagnosed") {
    return Diagnosed{j.at("disease").get<std::string>(),
                     j.at("at_turn").get<int>()};
  }
  if (status == "timeout") return Timeout{};
  if (status == "protocol_failure") {
    return ProtocolFailure{j.value("reason", std::string())};
  }
  throw ParseError("unknown session status \"" + status + "\"");
}

// Runs `fn`, turning nlohmann type/lookup errors into ParseError.
template <typename Fn>
auto guarded(std::string_view what, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError("malformed " + std::string(what) + ": " + e.what());
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& docs,
                 std::ios::openmode mode) {
  std::ofstream out(path, std::ios::binary | mode);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& d : docs) out << d.dump() << '\n';
  out.flush();
  if (!out) throw Error("write to " + path.string() + " failed");
}

}  // namespace

json to_json(const CaseProfile& p) {
  json symptoms = json::array();
  for (const auto& s : p.symptoms) {
    symptoms.push_back({{"category", s.category},
                        {"manifestation", s.manifestation},
                        {"trend", to_string(s.trend)}});
  }
  return {{"case_id", p.case_id},
          {"disease_id", p.disease_id},
          {"disease_text", p.disease_text},
          {"demographics",
           {{"age", p.demographics.age},
            {"gender", p.demographics.gender},
            {"occupation", p.demographics.occupation},
            {"history_notes", p.demographics.history_notes}}},
          {"symptoms", std::move(symptoms)},
          {"raw_document", p.raw_document}};
}

CaseProfile case_from_json(const json& j) {
  return guarded("case profile", [&] {
    CaseProfile p;
    p.case_id = j.at("case_id").get<std::string>();
    p.disease_id = j.at("disease_id").get<std::string>();
    p.disease_text = j.value("disease_text", std::string());
    const json& d = j.at("demographics");
    p.demographics.age = d.at("age").get<int>();
    p.demographics.gender = d.value("gender", std::string());
    p.demographics.occupation = d.value("occupation", std::string());
    p.demographics.history_notes = d.value("history_notes", std::string());
    for (const auto& s : j.at("symptoms")) {
      p.symptoms.push_back({s.at("category").get<std::string>(),
                            s.at("manifestation").get<std::string>(),
                            trend_from_string(s.at("trend").get<std::string>())});
    }
    p.raw_document = j.at("raw_document").get<std::string>();
    return p;
  });
}

json to_json(const RubricScore& score) {
  json j = json::object();
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    j[std::string(kDimensionCode[d])] = score.values[d];
  }
  return j;
}

RubricScore rubric_from_json(const json& j) {
  return guarded("rubric score", [&] {
    std::array<int, kDimensionCount> values{};
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      values[d] = j.at(std::string(kDimensionCode[d])).get<int>();
    }
    return make_rubric(values);
  });
}

json to_json(const JudgePanelResult& panel) {
  json per_judge = json::array();
  for (const auto& s : panel.per_judge) per_judge.push_back(to_json(s));
  json aggregated = json::object();
  for (std::size_t d = 0; d < kDimensionCount; ++d) {
    aggregated[std::string(kDimensionCode[d])] = panel.aggregated.values[d];
  }
  return {{"per_judge", std::move(per_judge)},
          {"aggregated", std::move(aggregated)},
          {"dqs", panel.dqs},
          {"timeout", panel.timeout}};
}

JudgePanelResult panel_from_json(const json& j) {
  return guarded("panel result", [&] {
    JudgePanelResult p;
    for (const auto& s : j.at("per_judge")) {
      p.per_judge.push_back(rubric_from_json(s));
    }
    const json& agg = j.at("aggregated");
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
      p.aggregated.values[d] = agg.at(std::string(kDimensionCode[d])).get<double>();
    }
    p.dqs = j.at("dqs").get<double>();
    p.timeout = j.value("timeout", false);
    return p;
  });
}

json to_json(const DialogueHistory& history) {
  json turns = json::array();
  for (const auto& t : history.turns()) {
    json turn = utterance_json(t.utterance);
    if (t.action) {
      turn["action"] = {{"kind", to_string(t.action->kind)},
                        {"payload", t.action->payload},
                        {"marker", t.action->marker}};
    } else {
      turn["action"] = nullptr;
    }
    turns.push_back(std::move(turn));
  }
  return turns;
}

DialogueHistory history_from_json(const json& j) {
  return guarded("dialogue history", [&] {
    DialogueHistory h;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const json& t = j.at(i);
      Utterance u = utterance_from(t);
      const json& a = t.at("action");
      if (i == 0) {
        if (!a.is_null()) {
          throw ParseError("first history turn must be the opening complaint");
        }
        h = DialogueHistory::open(std::move(u));
        continue;
      }
      if (a.is_null()) throw ParseError("history turn without an action");
      DoctorAction action{action_kind_from(a.at("kind").get<std::string>()),
                          a.at("payload").get<std::string>(),
                          a.value("marker", std::string())};
      h.append(std::move(action), std::move(u));
    }
    return h;
  });
}

json to_json(const SessionRecord& r) {
  json j{{"case_id", r.case_id},
         {"model", r.model},
         {"truth",
          {{"disease_id", r.truth.disease_id},
           {"name", r.truth.name},
           {"aliases", r.truth.aliases}}},
         {"config",
          {{"t_max", r.config.t_max},
           {"malformed_reply_retries", r.config.malformed_reply_retries},
           {"seed", r.config.seed}}},
         {"history", to_json(r.history)},
         {"thoughts", r.thoughts},
         {"outcome", outcome_json(r.outcome)},
         {"positive_findings", r.positive_findings},
         {"negative_findings", r.negative_findings},
         {"doctor_turns", r.doctor_turns},
         {"raw",
          {{"doctor", r.raw.doctor},
           {"patient", r.raw.patient},
           {"examiner", r.raw.examiner}}}};
  if (r.panel) j["panel"] = to_json(*r.panel);
  if (r.panel_failure) j["panel_failure"] = *r.panel_failure;
  return j;
}

SessionRecord record_from_json(const json& j) {
  return guarded("session record", [&] {
    SessionRecord r;
    r.case_id = j.at("case_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    const json& t = j.at("truth");
    r.truth.disease_id = t.at("disease_id").get<std::string>();
    r.truth.name = t.at("name").get<std::string>();
    r.truth.aliases =
        t.value("aliases", std::vector<std::string>{});
    const json& c = j.at("config");
    r.config.t_max = c.at("t_max").get<int>();
    r.config.malformed_reply_retries = c.at("malformed_reply_retries").get<int>();
    r.config.seed = c.value("seed", std::uint64_t{0});
    r.history = history_from_json(j.at("history"));
    r.thoughts = j.value("thoughts", std::vector<std::string>{});
    r.outcome = outcome_from(j.at("outcome"));
    r.positive_findings = j.at("positive_findings").get<int>();
    r.negative_findings = j.at("negative_findings").get<int>();
    r.doctor_turns = j.at("doctor_turns").get<int>();
    const json& raw = j.at("raw");
    r.raw.doctor = raw.at("doctor").get<std::vector<std::string>>();
    r.raw.patient = raw.at("patient").get<std::vector<std::string>>();
    r.raw.examiner = raw.at("examiner").get<std::vector<std::string>>();
    if (j.contains("panel") && !j.at("panel").is_null()) {
      r.panel = panel_from_json(j.at("panel"));
    }
    if (j.contains("panel_failure") && !j.at("panel_failure").is_null()) {
      r.panel_failure = j.at("panel_failure").get<std::string>();
    }
    return r;
  });
}

void save_records(const std::filesystem::path& path,
                  const std::vector<SessionRecord>& records) {
  std::vector<json> docs;
  for (const auto& r : records) docs.push_back(to_json(r));
  write_lines(path, docs, std::ios::trunc);
}

void append_record(const std::filesystem::path& path,
                   const SessionRecord& record) {
  write_lines(path, {to_json(record)}, std::ios::app);
}

std::vector<SessionRecord> load_records(const std::filesystem::path& path,
                                        LoadMode mode,
                                        std::vector<LoadWarning>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  std::vector<SessionRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc;
      try {
        doc = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(e.what());
      }
      records.push_back(record_from_json(doc));
    } catch (const Error& e) {
      const std::string message = path.string() + ":" + std::to_string(number) +
                                  ": " + e.what();
      if (mode == LoadMode::kStrict) throw ParseError(message);
      if (warnings) warnings->push_back({number, message});
    }
  }
  return records;
}

void save_cases(const std::filesystem::path& path,
                const std::vector<CaseProfile>& cases) {
  std::vector<json> docs;
  for (const auto& c : cases) docs.push_back(to_json(c));
  write_lines(path, docs, std::ios::trunc);
}

std::vector<CaseProfile> load_cases(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  std::vector<CaseProfile> cases;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      cases.push_back(case_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(number) + ": " +
                       e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(number) + ": " +
                       e.what());
    }
  }
  return cases;
}

}  // namespace dxsim
