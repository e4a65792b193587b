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

#include "dxsim/protocol.h"

#include <regex>

#include "dxsim/case_gen.h"
#include "dxsim/error.h"
#include "dxsim/prompts.h"
#include "dxsim/text.h"

namespace dxsim {

namespace {

struct Marker {
  std::string tag;
  std::string payload;
  bool terminated = false;
};

// All markers on one line. A payload ends at the last ')' before the next
// marker (or the end of the line).
std::vector<Marker> scan_line(std::string_view line) {
  static const std::regex kOpen(R"(\[!([A-Za-z_]+)!\]\s*\()");
  std::vector<Marker> markers;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (start, body)
  std::vector<std::string> tags;
  for (auto it = std::cregex_iterator(line.data(), line.data() + line.size(),
                                      kOpen);
       it != std::cregex_iterator(); ++it) {
    spans.emplace_back(static_cast<std::size_t>(it->position(0)),
                       static_cast<std::size_t>(it->position(0) +
                                                it->length(0)));
    tags.push_back((*it)[1].str());
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::size_t body = spans[i].second;
    const std::size_t limit =
        i + 1 < spans.size() ? spans[i + 1].first : line.size();
    std::string_view segment = line.substr(body, limit - body);
    Marker m;
    m.tag = tags[i];
    const std::size_t close = segment.rfind(')');
    if (close != std::string_view::npos) {
      m.terminated = true;
      m.payload = std::string(text::trim(segment.substr(0, close)));
    }
    markers.push_back(std::move(m));
  }
  return markers;
}

bool is_action_tag(std::string_view tag) {
  return tag == "Ask" || tag == "Test" || tag == "Exam" || tag == "Diagnosis";
}

bool is_finding_tag(std::string_view tag) {
  return tag == "Positive" || tag == "Negative";
}

DoctorAction action_from_marker(const Marker& m) {
  DoctorAction a;
  a.payload = m.payload;
  a.marker = m.tag;
  if (m.tag == "Ask") {
    a.kind = ActionKind::kAsk;
  } else if (m.tag == "Diagnosis") {
    a.kind = ActionKind::kDiag;
  } else {
    a.kind = ActionKind::kTest;  // Test and Exam both go to the examiner.
  }
  return a;
}

// "Thought:" / "**Action**:" style labels, tolerant of markdown emphasis.
std::optional<std::string_view> strip_label(std::string_view line,
                                            std::string_view label) {
  std::string_view s = text::trim(line);
  while (!s.empty() && (s.front() == '*' || s.front() == '#')) {
    s.remove_prefix(1);
  }
  if (!text::istarts_with(s, label)) return std::nullopt;
  s.remove_prefix(label.size());
  while (!s.empty() && s.front() == '*') s.remove_prefix(1);
  if (s.empty() || s.front() != ':') return std::nullopt;
  s.remove_prefix(1);
  while (!s.empty() && s.front() == '*') s.remove_prefix(1);
  return text::trim(s);
}

std::vector<FindingLine> collect_findings(std::string_view text, bool strict) {
  std::vector<FindingLine> findings;
  for (std::string_view line : text::split_lines(text)) {
    for (const Marker& m : scan_line(line)) {
      if (!is_finding_tag(m.tag)) continue;
      if (!m.terminated) {
        if (!strict) continue;
        throw ProtocolError(ProtocolErrorKind::kUnterminatedMarker,
                            "unterminated [!" + m.tag + "!] marker");
      }
      if (m.payload.empty()) {
        if (!strict) continue;
        throw ProtocolError(ProtocolErrorKind::kEmptyPayload,
                            "empty [!" + m.tag + "!] finding");
      }
      findings.push_back({m.tag == "Positive" ? Polarity::kPositive
                                              : Polarity::kNegative,
                          m.payload});
    }
  }
  if (strict && findings.empty()) {
    throw ProtocolError(ProtocolErrorKind::kNoFindings,
                        "reply carries no [!Positive!]/[!Negative!] markers");
  }
  return findings;
}

constexpr std::string_view kPatientLabel = "Patient: ";
constexpr std::string_view kDoctorLabel = "Doctor: ";
constexpr std::string_view kExaminerLabel = "Examiner: ";
constexpr std::string_view kContinuation = "  ";

void write_entry(std::string& out, std::string_view label,
                 std::string_view body) {
  out.append(label);
  bool first = true;
  for (std::string_view line : text::split_lines(body)) {
    if (!first) {
      out.push_back('\n');
      out.append(kContinuation);
    }
    out.append(line);
    first = false;
  }
  out.push_back('\n');
}

}  // namespace

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kAsk:
      return "Ask";
    case ActionKind::kTest:
      return "Test";
    case ActionKind::kDiag:
      return "Diag";
  }
  return "?";
}

std::string_view to_string(Speaker speaker) {
  switch (speaker) {
    case Speaker::kPatient:
      return "patient";
    case Speaker::kExaminer:
      return "examiner";
    case Speaker::kDoctor:
      return "doctor";
  }
  return "?";
}

DoctorAction DoctorAction::ask(std::string question) {
  return {ActionKind::kAsk, std::move(question), "Ask"};
}
DoctorAction DoctorAction::test(std::string request) {
  return {ActionKind::kTest, std::move(request), "Test"};
}
DoctorAction DoctorAction::diag(std::string disease) {
  return {ActionKind::kDiag, std::move(disease), "Diagnosis"};
}

std::string render_action(const DoctorAction& action) {
  std::string marker = action.marker;
  if (marker.empty()) {
    marker = action.kind == ActionKind::kAsk    ? "Ask"
             : action.kind == ActionKind::kTest ? "Test"
                                                : "Diagnosis";
  }
  return "[!" + marker + "!](" + action.payload + ")";
}

DialogueHistory DialogueHistory::open(Utterance opening) {
  DialogueHistory h;
  opening.findings.clear();
  h.turns_.push_back({std::nullopt, std::move(opening)});
  h.opened_ = true;
  return h;
}

void DialogueHistory::append(DoctorAction action, Utterance utterance) {
  if (!opened_) {
    throw ProtocolError(ProtocolErrorKind::kHistoryNotOpened,
                        "history must be opened before appending");
  }
  turns_.push_back({std::move(action), std::move(utterance)});
}

DialogueHistory append_history(DialogueHistory history, DoctorAction action,
                               Utterance utterance) {
  history.append(std::move(action), std::move(utterance));
  return history;
}

DoctorReply parse_doctor_reply(std::string_view text) {
  const auto lines = text::split_lines(text);
  std::vector<Marker> actions;
  std::optional<std::size_t> marker_line;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (Marker& m : scan_line(lines[i])) {
      if (!is_action_tag(m.tag)) {
        throw ProtocolError(ProtocolErrorKind::kUnknownMarker,
                            "unknown marker [!" + m.tag + "!]");
      }
      if (!marker_line) marker_line = i;
      actions.push_back(std::move(m));
    }
  }
  if (actions.empty()) {
    throw ProtocolError(ProtocolErrorKind::kNoAction,
                        "reply contains no action marker");
  }
  if (actions.size() > 1) {
    throw ProtocolError(ProtocolErrorKind::kMultipleActions,
                        "reply contains " + std::to_string(actions.size()) +
                            " action markers; exactly one is allowed");
  }
  const Marker& m = actions.front();
  if (!m.terminated) {
    throw ProtocolError(ProtocolErrorKind::kUnterminatedMarker,
                        "unterminated [!" + m.tag + "!] marker");
  }
  if (m.payload.empty()) {
    throw ProtocolError(ProtocolErrorKind::kEmptyPayload,
                        "empty [!" + m.tag + "!] payload");
  }

  DoctorReply reply;
  reply.action = action_from_marker(m);

  std::string thought;
  bool in_thought = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == *marker_line || strip_label(lines[i], "Action")) break;
    if (auto rest = strip_label(lines[i], "Thought")) {
      in_thought = true;
      thought.assign(*rest);
      continue;
    }
    if (in_thought) {
      if (!thought.empty()) thought.push_back('\n');
      thought.append(text::trim(lines[i]));
    }
  }
  reply.thought = std::string(text::trim(thought));
  return reply;
}

std::vector<FindingLine> parse_finding_lines(std::string_view text) {
  return collect_findings(text, /*strict=*/true);
}

std::vector<FindingLine> scan_finding_lines(std::string_view text) {
  return collect_findings(text, /*strict=*/false);
}

std::string serialize_history(const DialogueHistory& history) {
  std::string out;
  for (std::size_t i = 0; i < history.turns().size(); ++i) {
    const Turn& turn = history.turns()[i];
    if (turn.action) {
      write_entry(out, kDoctorLabel, render_action(*turn.action));
      if (turn.action->kind == ActionKind::kDiag) continue;
    }
    write_entry(out,
                turn.utterance.speaker == Speaker::kExaminer ? kExaminerLabel
                                                             : kPatientLabel,
                turn.utterance.text);
  }
  return out;
}

DialogueHistory parse_history(std::string_view transcript) {
  struct Entry {
    Speaker speaker;
    std::string text;
  };
  std::vector<Entry> entries;
  for (std::string_view line : text::split_lines(transcript)) {
    if (line.starts_with(kContinuation) && !entries.empty()) {
      entries.back().text.push_back('\n');
      entries.back().text.append(line.substr(kContinuation.size()));
    } else if (line.starts_with(kPatientLabel)) {
      entries.push_back(
          {Speaker::kPatient, std::string(line.substr(kPatientLabel.size()))});
    } else if (line.starts_with(kDoctorLabel)) {
      entries.push_back(
          {Speaker::kDoctor, std::string(line.substr(kDoctorLabel.size()))});
    } else if (line.starts_with(kExaminerLabel)) {
      entries.push_back({Speaker::kExaminer,
                         std::string(line.substr(kExaminerLabel.size()))});
    } else if (!text::trim(line).empty()) {
      throw ParseError("unrecognized transcript line: " + std::string(line));
    }
  }
  if (entries.empty() || entries.front().speaker != Speaker::kPatient) {
    throw ParseError("transcript must open with a patient line");
  }
  DialogueHistory history =
      DialogueHistory::open({Speaker::kPatient, entries.front().text, {}});
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].speaker != Speaker::kDoctor) {
      throw ParseError("expected a doctor line in transcript");
    }
    DoctorAction action = parse_doctor_reply(entries[i].text).action;
    if (action.kind == ActionKind::kDiag) {
      history.append(action, {Speaker::kDoctor, action.payload, {}});
      continue;
    }
    if (i + 1 >= entries.size() || entries[i + 1].speaker == Speaker::kDoctor) {
      throw ParseError("doctor action without a response in transcript");
    }
    ++i;
    history.append(std::move(action),
                   {entries[i].speaker, entries[i].text,
                    scan_finding_lines(entries[i].text)});
  }
  return history;
}

std::string render_prompt(PromptRole role, const CaseProfile& profile,
                          std::string_view context) {
  switch (role) {
    case PromptRole::kDoctor:
      return prompts::fill(prompts::kDoctor,
                           {{"chat_history", std::string(context)}});
    case PromptRole::kPatientOpening:
      return prompts::fill(prompts::kPatientOpening,
                           {{"disease_description", profile.raw_document}});
    case PromptRole::kPatient:
      return prompts::fill(prompts::kPatient,
                           {{"disease_description", profile.raw_document},
                            {"doctor_question", std::string(context)}});
    case PromptRole::kExaminer:
      return prompts::fill(prompts::kExaminer,
                           {{"disease_description", profile.raw_document},
                            {"doctor_examination", std::string(context)}});
  }
  throw PreconditionError("unknown prompt role");
}

std::string_view format_reminder(PromptRole role) {
  if (role == PromptRole::kDoctor) {
    return "Your previous reply could not be processed. Answer again in "
           "exactly this format, with exactly one action:\n"
           "Thought: (your reasoning process)\n"
           "Action: [!Ask!](your question) OR [!Exam!](your physical exam "
           "item) OR [!Test!](your test request) OR [!Diagnosis!](your "
           "diagnosis)";
  }
  return "Your previous reply could not be processed. Answer again, putting "
         "each answer on its own line as [!Positive!](...) or "
         "[!Negative!](...).";
}

}  // namespace dxsim
