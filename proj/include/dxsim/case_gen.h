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

// Knowledge-grounded synthetic patient cases.
//
// A case is produced by sampling a disease node, prompting a generator model
// with the disease's encyclopedia passage, parsing the six-section case
// document it returns and checking it against the graph. Generation fails
// closed: a profile that does not validate is never returned.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dxsim/kb.h"
#include "dxsim/llm.h"

namespace dxsim {

enum class Trend { kWorsening, kImproving, kStable };

std::string_view to_string(Trend trend);
Trend trend_from_string(std::string_view s);

struct DemographicProfile {
  int age = 0;
  std::string gender;
  std::string occupation;
  std::string history_notes;

  bool operator==(const DemographicProfile&) const = default;
};

struct SymptomManifestation {
  std::string category;
  std::string manifestation;
  Trend trend = Trend::kStable;

  bool operator==(const SymptomManifestation&) const = default;
};

struct CaseProfile {
  std::string case_id;
  std::string disease_id;
  /// Encyclopedia passage the case was generated from.
  std::string disease_text;
  DemographicProfile demographics;
  std::vector<SymptomManifestation> symptoms;
  std::string raw_document;

  bool operator==(const CaseProfile&) const = default;
};

enum class CaseSection {
  kBasicInformation,
  kPastHistory,
  kChiefComplaint,
  kSymptomList,
  kPhysicalExamination,
  kAuxiliaryExamination,
};

inline constexpr std::size_t kCaseSectionCount = 6;

std::string_view section_title(CaseSection section);

struct ParsedCase {
  DemographicProfile demographics;
  std::vector<SymptomManifestation> symptoms;
  /// Body text of every recognized section.
  std::map<CaseSection, std::string> sections;
};

/// Sections found in `document`, keyed by header. Throws
/// ForbiddenSectionError when a diagnosis or treatment section is present.
std::map<CaseSection, std::string> split_case_sections(std::string_view document);

/// Header-keyed, order-independent. Throws MissingSectionError when the
/// basic-information or symptom-list section is absent,
/// ForbiddenSectionError, or SymptomEntryError.
ParsedCase parse_case_document(std::string_view document);

/// Throws PreconditionError on an empty passage.
std::string render_case_prompt(const DiseaseNode& disease,
                               std::string_view passage);

struct Violation {
  std::string code;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  bool passed = false;
  std::vector<Violation> violations;
  double overlap_ratio = 0.0;

  bool operator==(const ValidationReport&) const = default;
};

struct ValidationOptions {
  double overlap_threshold = 0.5;
};

/// True when every token of one side occurs in the other (case-insensitive).
bool symptom_matches(std::string_view case_symptom, std::string_view kg_symptom);

/// Pure structural check of a parsed profile against the graph.
ValidationReport validate_case(const CaseProfile& profile,
                               const KnowledgeGraph& kg,
                               const ValidationOptions& options = {});

struct GenerationOptions {
  int max_attempts = 3;
  ValidationOptions validation;
};

/// Prompts `generator` for `disease` until a document parses and validates.
/// Throws CaseValidationError once max_attempts is spent; backend errors
/// propagate.
CaseProfile generate_case_for(const KnowledgeBase& kb,
                              const DiseaseNode& disease,
                              ChatBackend& generator,
                              const GenerationOptions& options = {});

/// sample_disease(kb.graph, seed) followed by generate_case_for.
CaseProfile generate_case(const KnowledgeBase& kb, ChatBackend& generator,
                          std::uint64_t seed,
                          const GenerationOptions& options = {});

}  // namespace dxsim
