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

// Dialogue wire protocol.
//
// Agents mark structured content with `[!Tag!](payload)`. A payload runs to
// the last ')' on its line before the next marker, so parentheses inside a
// payload need no escaping. Markers are case-sensitive; surrounding
// whitespace is ignored. See docs/protocol.md for the full grammar.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dxsim {

struct CaseProfile;

enum class ActionKind { kAsk, kTest, kDiag };

std::string_view to_string(ActionKind kind);

struct DoctorAction {
  ActionKind kind = ActionKind::kAsk;
  std::string payload;
  /// Marker tag as emitted ("Ask", "Test", "Exam", "Diagnosis").
  std::string marker;

  static DoctorAction ask(std::string question);
  static DoctorAction test(std::string request);
  static DoctorAction diag(std::string disease);

  bool operator==(const DoctorAction&) const = default;
};

/// `[!marker!](payload)`.
std::string render_action(const DoctorAction& action);

enum class Polarity { kPositive, kNegative };

struct FindingLine {
  Polarity polarity = Polarity::kPositive;
  std::string text;

  bool operator==(const FindingLine&) const = default;
};

enum class Speaker { kPatient, kExaminer, kDoctor };

std::string_view to_string(Speaker speaker);

struct Utterance {
  Speaker speaker = Speaker::kPatient;
  std::string text;
  std::vector<FindingLine> findings;

  bool operator==(const Utterance&) const = default;
};

struct Turn {
  /// Empty only for the opening complaint.
  std::optional<DoctorAction> action;
  Utterance utterance;

  bool operator==(const Turn&) const = default;
};

/// Append-only dialogue history. The first turn is the patient's opening
/// complaint; every later turn pairs one doctor action with the utterance
/// it produced (for a diagnosis, the doctor's own statement).
class DialogueHistory {
 public:
  DialogueHistory() = default;

  static DialogueHistory open(Utterance opening);

  bool opened() const { return opened_; }
  const std::vector<Turn>& turns() const { return turns_; }
  std::size_t size() const { return turns_.size(); }

  /// Throws ProtocolError(kHistoryNotOpened) before open().
  void append(DoctorAction action, Utterance utterance);

  bool operator==(const DialogueHistory&) const = default;

 private:
  std::vector<Turn> turns_;
  bool opened_ = false;
};

DialogueHistory append_history(DialogueHistory history, DoctorAction action,
                               Utterance utterance);

struct DoctorReply {
  std::string thought;
  DoctorAction action;
};

/// Extracts the Thought block and exactly one action marker. `[!Exam!]` is
/// normalized to a Test action. Throws ProtocolError.
DoctorReply parse_doctor_reply(std::string_view text);

/// One finding per Positive/Negative marker, in document order.
/// Throws ProtocolError(kNoFindings) when there are none.
std::vector<FindingLine> parse_finding_lines(std::string_view text);

/// Same as parse_finding_lines but returns an empty list instead of throwing.
std::vector<FindingLine> scan_finding_lines(std::string_view text);

/// Renders "Patient: ...", "Doctor: ...", "Examiner: ..." lines in turn
/// order; continuation lines of multi-line utterances are indented by two
/// spaces.
std::string serialize_history(const DialogueHistory& history);

/// Inverse of serialize_history.
DialogueHistory parse_history(std::string_view transcript);

enum class PromptRole { kDoctor, kPatientOpening, kPatient, kExaminer };

/// Substitutes the role's template. `context` is the serialized history for
/// the doctor, the question for the patient, the requested examination for
/// the examiner and is unused for the opening. Throws ProtocolError
/// (kMissingSlot) when a slot value is empty.
std::string render_prompt(PromptRole role, const CaseProfile& profile,
                          std::string_view context);

/// Appended as a follow-up user message after a malformed reply.
std::string_view format_reminder(PromptRole role);

}  // namespace dxsim
