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

// Doctor / patient / examiner dialogue loop.
//
// A session opens with the patient's chief complaint, then alternates one
// doctor action with one environment response: Ask goes to the patient,
// Test to the examiner, and a diagnosis ends the session. A turn is one
// doctor action, the final diagnosis included; a diagnosis issued as the
// t_max-th action still counts as diagnosed.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dxsim/case_gen.h"
#include "dxsim/judge.h"
#include "dxsim/llm.h"
#include "dxsim/protocol.h"

namespace dxsim {

struct SessionConfig {
  int t_max = 15;
  /// Corrective re-prompts allowed per agent reply before giving up.
  int malformed_reply_retries = 1;
  std::uint64_t seed = 0;

  bool operator==(const SessionConfig&) const = default;
};

void validate(const SessionConfig& config);

struct Diagnosed {
  std::string disease;
  int at_turn = 0;
  bool operator==(const Diagnosed&) const = default;
};
struct Timeout {
  bool operator==(const Timeout&) const = default;
};
struct ProtocolFailure {
  std::string reason;
  bool operator==(const ProtocolFailure&) const = default;
};

using SessionOutcome = std::variant<Diagnosed, Timeout, ProtocolFailure>;

std::string_view outcome_status(const SessionOutcome& outcome);

/// What a diagnosis is matched against.
struct DiagnosisKey {
  std::string disease_id;
  std::string name;
  std::vector<std::string> aliases;

  static DiagnosisKey from(const DiseaseNode& node);
  bool operator==(const DiagnosisKey&) const = default;
};

/// Every backend reply in call order, per role; enough to replay a session.
struct RawTranscript {
  std::vector<std::string> doctor;
  std::vector<std::string> patient;
  std::vector<std::string> examiner;
  bool operator==(const RawTranscript&) const = default;
};

struct SessionRecord {
  std::string case_id;
  std::string model;
  DiagnosisKey truth;
  SessionConfig config;
  DialogueHistory history;
  /// Doctor reasoning for each accepted doctor reply.
  std::vector<std::string> thoughts;
  SessionOutcome outcome = Timeout{};
  int positive_findings = 0;
  int negative_findings = 0;
  int doctor_turns = 0;
  RawTranscript raw;
  std::optional<JudgePanelResult> panel;
  std::optional<std::string> panel_failure;

  bool operator==(const SessionRecord&) const = default;
};

struct AgentSet {
  ChatBackend& doctor;
  ChatBackend& patient;
  ChatBackend& examiner;
};

/// u_1: the chief complaint, carrying no findings.
Utterance open_dialogue(const CaseProfile& profile, ChatBackend& patient);

/// Ask -> patient utterance, Test -> examiner utterance, Diag -> nullopt.
/// Environment replies without finding markers are re-prompted up to
/// `reply_retries` times, then ProtocolError propagates.
std::optional<Utterance> route_response(const DoctorAction& action,
                                        const CaseProfile& profile,
                                        ChatBackend& patient,
                                        ChatBackend& examiner,
                                        int reply_retries = 0);

/// Runs one session to diagnosis, timeout or protocol failure. Backend and
/// protocol errors never escape; they become ProtocolFailure.
SessionRecord run_session(const CaseProfile& profile, const DiagnosisKey& truth,
                          AgentSet agents, const SessionConfig& config);

struct SessionAgents {
  std::shared_ptr<ChatBackend> doctor;
  std::shared_ptr<ChatBackend> patient;
  std::shared_ptr<ChatBackend> examiner;
};

struct SessionCase {
  CaseProfile profile;
  DiagnosisKey truth;
};

/// Builds the agents for one session. Called once per session, possibly
/// from several threads at once.
using AgentFactory = std::function<SessionAgents(const SessionCase&)>;

/// Invoked as each session completes, serialized under a lock.
using RecordSink = std::function<void(std::size_t index, const SessionRecord&)>;

/// Runs sessions on up to `parallelism` threads. Output order matches input
/// order; a failed session yields a ProtocolFailure record and the batch
/// carries on.
std::vector<SessionRecord> run_batch(const std::vector<SessionCase>& cases,
                                     const AgentFactory& factory,
                                     const SessionConfig& config,
                                     int parallelism,
                                     const RecordSink& sink = {});

/// Calls fn(i) for i in [0, n) on up to `parallelism` threads. The first
/// exception thrown by fn is rethrown after all workers join.
void parallel_for(std::size_t n, int parallelism,
                  const std::function<void(std::size_t)>& fn);

/// Finding tallies recomputed from the utterance texts in `history`.
struct FindingCounts {
  int positive = 0;
  int negative = 0;
};
FindingCounts recount_findings(const DialogueHistory& history);

/// Re-runs the session on scripted backends fed with the recorded raw
/// replies. The result must equal the stored record in outcome and counts.
SessionRecord replay_session(const SessionRecord& record);

}  // namespace dxsim
