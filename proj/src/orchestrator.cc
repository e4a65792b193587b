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

#include "dxsim/orchestrator.h"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "dxsim/error.h"
#include "dxsim/text.h"

namespace dxsim {

namespace {

// Sends `prompt`, then re-prompts with the format reminder while `parse`
// rejects the reply with a ProtocolError and retries remain.
template <typename Parse>
auto ask_with_retries(ChatBackend& backend, PromptRole role,
                      const std::string& prompt, int retries, Parse parse) {
  std::vector<ChatMessage> messages{{ChatRole::kUser, prompt}};
  for (int attempt = 0;; ++attempt) {
    std::string reply = backend.complete(
        ChatRequest::evaluation(messages, backend.model_id()));
    try {
      return parse(reply);
    } catch (const ProtocolError&) {
      if (attempt >= retries) throw;
      messages.push_back({ChatRole::kAssistant, std::move(reply)});
      messages.push_back({ChatRole::kUser, std::string(format_reminder(role))});
    }
  }
}

}  // namespace

void validate(const SessionConfig& config) {
  if (config.t_max < 1) throw PreconditionError("t_max must be at least 1");
  if (config.malformed_reply_retries < 0) {
    throw PreconditionError("malformed_reply_retries must be non-negative");
  }
}

std::string_view outcome_status(const SessionOutcome& outcome) {
  switch (outcome.index()) {
    case 0:
      return "diagnosed";
    case 1:
      return "timeout";
    default:
      return "protocol_failure";
  }
}

DiagnosisKey DiagnosisKey::from(const DiseaseNode& node) {
  return {node.id, node.canonical_name, node.aliases};
}

Utterance open_dialogue(const CaseProfile& profile, ChatBackend& patient) {
  const std::string reply = patient.complete(ChatRequest::user(
      render_prompt(PromptRole::kPatientOpening, profile, {}),
      patient.model_id()));
  std::string complaint(text::trim(reply));
  if (complaint.empty()) {
    throw ProtocolError(ProtocolErrorKind::kEmptyPayload,
                        "patient opening is empty");
  }
  return {Speaker::kPatient, std::move(complaint), {}};
}

std::optional<Utterance> route_response(const DoctorAction& action,
                                        const CaseProfile& profile,
                                        ChatBackend& patient,
                                        ChatBackend& examiner,
                                        int reply_retries) {
  if (action.kind == ActionKind::kDiag) return std::nullopt;
  const bool ask = action.kind == ActionKind::kAsk;
  const PromptRole role = ask ? PromptRole::kPatient : PromptRole::kExaminer;
  ChatBackend& backend = ask ? patient : examiner;
  const Speaker speaker = ask ? Speaker::kPatient : Speaker::kExaminer;
  return ask_with_retries(
      backend, role, render_prompt(role, profile, action.payload),
      reply_retries, [&](const std::string& reply) {
        auto findings = parse_finding_lines(reply);
        return Utterance{speaker, std::string(text::trim(reply)),
                         std::move(findings)};
      });
}

SessionRecord run_session(const CaseProfile& profile, const DiagnosisKey& truth,
                          AgentSet agents, const SessionConfig& config) {
  validate(config);
  SessionRecord record;
  record.case_id = profile.case_id;
  record.model = agents.doctor.model_id();
  record.truth = truth;
  record.config = config;

  RecordingBackend doctor(agents.doctor);
  RecordingBackend patient(agents.patient);
  RecordingBackend examiner(agents.examiner);
  const int retries = config.malformed_reply_retries;

  try {
    record.history = DialogueHistory::open(open_dialogue(profile, patient));
    record.outcome = Timeout{};
    for (int turn = 1; turn <= config.t_max; ++turn) {
      const std::string prompt = render_prompt(
          PromptRole::kDoctor, profile, serialize_history(record.history));
      DoctorReply reply =
          ask_with_retries(doctor, PromptRole::kDoctor, prompt, retries,
                           [](const std::string& r) {
                             return parse_doctor_reply(r);
                           });
      record.thoughts.push_back(std::move(reply.thought));
      record.doctor_turns = turn;
      if (reply.action.kind == ActionKind::kDiag) {
        std::string disease = reply.action.payload;
        record.history.append(reply.action,
                              {Speaker::kDoctor, disease, {}});
        record.outcome = Diagnosed{std::move(disease), turn};
        break;
      }
      auto utterance =
          route_response(reply.action, profile, patient, examiner, retries);
      record.history.append(std::move(reply.action), std::move(*utterance));
    }
  } catch (const ProtocolError& e) {
    record.outcome = ProtocolFailure{e.what()};
  } catch (const BackendError& e) {
    record.outcome = ProtocolFailure{std::string("backend: ") + e.what()};
  } catch (const Error& e) {
    record.outcome = ProtocolFailure{e.what()};
  }

  const FindingCounts counts = recount_findings(record.history);
  record.positive_findings = counts.positive;
  record.negative_findings = counts.negative;
  record.raw = {doctor.replies(), patient.replies(), examiner.replies()};
  return record;
}

void parallel_for(std::size_t n, int parallelism,
                  const std::function<void(std::size_t)>& fn) {
  if (parallelism < 1) throw PreconditionError("parallelism must be >= 1");
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first) std::rethrow_exception(first);
}

std::vector<SessionRecord> run_batch(const std::vector<SessionCase>& cases,
                                     const AgentFactory& factory,
                                     const SessionConfig& config,
                                     int parallelism, const RecordSink& sink) {
  validate(config);
  std::vector<SessionRecord> records(cases.size());
  std::mutex sink_mu;
  parallel_for(cases.size(), parallelism, [&](std::size_t i) {
    const SessionCase& c = cases[i];
    SessionRecord record;
    try {
      SessionAgents agents = factory(c);
      if (!agents.doctor || !agents.patient || !agents.examiner) {
        throw PreconditionError("agent factory returned a null backend");
      }
      record = run_session(c.profile, c.truth,
                           {*agents.doctor, *agents.patient, *agents.examiner},
                           config);
    } catch (const std::exception& e) {
      record = SessionRecord{};
      record.case_id = c.profile.case_id;
      record.truth = c.truth;
      record.config = config;
      record.outcome = ProtocolFailure{std::string("setup: ") + e.what()};
    }
    records[i] = record;
    if (sink) {
      std::lock_guard lock(sink_mu);
      sink(i, records[i]);
    }
  });
  return records;
}

FindingCounts recount_findings(const DialogueHistory& history) {
  FindingCounts counts;
  for (std::size_t i = 1; i < history.turns().size(); ++i) {
    const Utterance& u = history.turns()[i].utterance;
    if (u.speaker == Speaker::kDoctor) continue;
    for (const auto& f : scan_finding_lines(u.text)) {
      (f.polarity == Polarity::kPositive ? counts.positive : counts.negative)++;
    }
  }
  return counts;
}

SessionRecord replay_session(const SessionRecord& record) {
  ScriptedBackend doctor(record.raw.doctor, record.model);
  ScriptedBackend patient(record.raw.patient, "patient");
  ScriptedBackend examiner(record.raw.examiner, "examiner");
  // Scripted agents ignore prompt content; the profile only has to render.
  CaseProfile profile;
  profile.case_id = record.case_id;
  profile.disease_id = record.truth.disease_id;
  profile.raw_document = "(replay)";
  SessionRecord replayed =
      run_session(profile, record.truth, {doctor, patient, examiner},
                  record.config);
  replayed.panel = record.panel;
  replayed.panel_failure = record.panel_failure;
  return replayed;
}

}  // namespace dxsim
