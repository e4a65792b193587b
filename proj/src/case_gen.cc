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

#include "dxsim/case_gen.h"

#include <algorithm>
#include <optional>
#include <regex>
#include <set>

#include "dxsim/error.h"
#include "dxsim/prompts.h"
#include "dxsim/text.h"

namespace dxsim {

namespace {

struct HeaderName {
  CaseSection section;
  std::string_view name;
};

// Canonical prompt headers first, then the looser headers seen in
// hand-written profiles.
constexpr HeaderName kHeaders[] = {
    {CaseSection::kBasicInformation, "Basic Information"},
    {CaseSection::kPastHistory, "Past Medical History"},
    {CaseSection::kChiefComplaint, "Chief Complaint"},
    {CaseSection::kSymptomList, "Symptom List"},
    {CaseSection::kPhysicalExamination, "Physical Examination Summary"},
    {CaseSection::kAuxiliaryExamination, "Auxiliary Examination Results"},
    {CaseSection::kPhysicalExamination, "Physical Examination"},
    {CaseSection::kAuxiliaryExamination, "Auxiliary Examination"},
    {CaseSection::kBasicInformation, "Demographics"},
    {CaseSection::kPastHistory, "Past History"},
    {CaseSection::kPastHistory, "Family History"},
    {CaseSection::kSymptomList, "Presenting Symptoms"},
    {CaseSection::kAuxiliaryExamination, "Laboratory Findings"},
    {CaseSection::kAuxiliaryExamination, "Imaging"},
};

constexpr std::string_view kForbiddenHeaders[] = {
    "Preliminary Diagnosis", "Final Diagnosis", "Differential Diagnosis",
    "Diagnostic Conclusion", "Diagnosis", "Diagnoses",
    "Treatment",             "Management Plan",
};

bool is_bullet(std::string_view s) {
  return s.starts_with("- ") || s.starts_with("* ") || s.starts_with("+ ") ||
         s.starts_with("\xE2\x80\xA2");  // U+2022
}

// Strips heading / emphasis / numbering decoration. Returns nullopt for
// bullet lines, which are never headers.
std::optional<std::string> header_text(std::string_view line) {
  std::string_view s = text::trim(line);
  if (is_bullet(s)) return std::nullopt;
  while (!s.empty() && (s.front() == '#' || s.front() == '*' ||
                        s.front() == '_' || s.front() == ' ')) {
    s.remove_prefix(1);
  }
  static const std::regex kNumbering(R"(^(\d+|[IVX]+)[.)]\s*)");
  std::string out(s);
  out = std::regex_replace(out, kNumbering, "");
  out.erase(std::remove(out.begin(), out.end(), '*'), out.end());
  return std::string(text::trim(out));
}

// Remainder after a header name that still reads as part of a header:
// nothing, a parenthetical, a trailing colon, or "& ..."/"and ...".
bool header_remainder(std::string_view rest) {
  rest = text::trim(rest);
  if (!rest.empty() && rest.back() == ':') rest.remove_suffix(1);
  rest = text::trim(rest);
  return rest.empty() || rest.front() == '(' || rest.front() == '&' ||
         text::istarts_with(rest, "and ");
}

std::optional<CaseSection> match_header(std::string_view line) {
  auto h = header_text(line);
  if (!h) return std::nullopt;
  for (const auto& header : kHeaders) {
    if (text::istarts_with(*h, header.name) &&
        header_remainder(std::string_view(*h).substr(header.name.size()))) {
      return header.section;
    }
  }
  return std::nullopt;
}

std::optional<std::string_view> match_forbidden(std::string_view line) {
  std::string_view s = text::trim(line);
  if (is_bullet(s)) s = text::trim(s.substr(s.front() == '-' ? 1 : 2));
  auto h = header_text(s);
  if (!h) return std::nullopt;
  for (std::string_view name : kForbiddenHeaders) {
    if (!text::istarts_with(*h, name)) continue;
    std::string_view rest = std::string_view(*h).substr(name.size());
    rest = text::trim(rest);
    if (rest.empty() || rest.front() == ':' || rest.front() == '(' ||
        text::istarts_with(rest, "and ") || text::istarts_with(rest, "plan") ||
        text::istarts_with(rest, "recommendation")) {
      return name;
    }
  }
  return std::nullopt;
}

std::string strip_markdown(std::string_view s) {
  std::string out(text::trim(s));
  out = text::replace_all(out, "**", "");
  out = text::replace_all(out, "__", "");
  std::string_view v = text::trim(out);
  static const std::regex kLead(R"(^([-*+]|\xE2\x80\xA2|\d+[.)]|[a-z][.)])\s+)");
  return std::regex_replace(std::string(v), kLead, "");
}

std::optional<Trend> trend_from_text(std::string_view s) {
  const std::string l = text::to_lower(s);
  auto has = [&](std::initializer_list<std::string_view> words) {
    return std::any_of(words.begin(), words.end(), [&](std::string_view w) {
      return l.find(w) != std::string::npos;
    });
  };
  if (has({"worsen", "progress", "increas", "aggravat", "deteriorat"})) {
    return Trend::kWorsening;
  }
  if (has({"improv", "alleviat", "reliev", "decreas", "resolv", "better",
           "subsid"})) {
    return Trend::kImproving;
  }
  if (has({"stable", "unchanged", "persist", "constant", "remain", "same"})) {
    return Trend::kStable;
  }
  return std::nullopt;
}

struct PendingSymptom {
  std::string title;
  std::string category;
  std::string manifestation;
  std::string trend;
  bool has_fields = false;

  bool empty() const {
    return title.empty() && category.empty() && manifestation.empty() &&
           trend.empty();
  }
};

std::string clean_value(std::string_view v) {
  v = text::trim(v);
  while (!v.empty() && (v.back() == ';' || v.back() == ',' || v.back() == '|')) {
    v.remove_suffix(1);
    v = text::trim(v);
  }
  return std::string(v);
}

void flush_symptom(PendingSymptom& p, std::vector<SymptomManifestation>& out) {
  if (p.empty()) return;
  SymptomManifestation s;
  s.category = p.category.empty() ? "unspecified" : p.category;
  s.manifestation = p.manifestation.empty() ? p.title : p.manifestation;
  if (text::trim(s.manifestation).empty()) {
    throw SymptomEntryError("symptom entry without a manifestation");
  }
  if (!p.trend.empty()) {
    auto t = trend_from_text(p.trend);
    if (!t) {
      throw SymptomEntryError("unrecognized symptom trend \"" + p.trend + "\"");
    }
    s.trend = *t;
  }
  out.push_back(std::move(s));
  p = {};
}

std::vector<std::string> table_cells(std::string_view line) {
  std::vector<std::string> cells;
  std::string_view s = text::trim(line);
  if (s.starts_with('|')) s.remove_prefix(1);
  if (s.ends_with('|')) s.remove_suffix(1);
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('|', start);
    if (end == std::string_view::npos) end = s.size();
    cells.push_back(strip_markdown(s.substr(start, end - start)));
    start = end + 1;
  }
  return cells;
}

std::vector<SymptomManifestation> parse_symptoms(std::string_view body) {
  static const std::regex kLabel(
      R"((category|specific manifestation|manifestation|dynamic trend|trend)\s*[:：])",
      std::regex::icase);
  std::vector<SymptomManifestation> out;
  PendingSymptom current;

  for (std::string_view raw : text::split_lines(body)) {
    std::string_view trimmed = text::trim(raw);
    if (trimmed.empty()) continue;

    if (trimmed.starts_with('|')) {
      auto cells = table_cells(trimmed);
      const bool separator = std::all_of(
          cells.begin(), cells.end(), [](const std::string& c) {
            return c.find_first_not_of("-: ") == std::string::npos;
          });
      if (separator || cells.size() < 2 ||
          text::istarts_with(cells[0], "category")) {
        continue;
      }
      flush_symptom(current, out);
      current.category = cells[0];
      current.manifestation = cells[1];
      if (cells.size() > 2) current.trend = cells[2];
      current.has_fields = true;
      flush_symptom(current, out);
      continue;
    }

    const std::string line = strip_markdown(trimmed);
    std::vector<std::pair<std::string, std::size_t>> labels;  // (name, end)
    std::vector<std::size_t> starts;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), kLabel);
         it != std::sregex_iterator(); ++it) {
      labels.emplace_back(text::to_lower((*it)[1].str()),
                          static_cast<std::size_t>(it->position(0) +
                                                   it->length(0)));
      starts.push_back(static_cast<std::size_t>(it->position(0)));
    }

    if (labels.empty()) {
      flush_symptom(current, out);
      current.title = clean_value(line);
      continue;
    }

    // Text before the first label is a title ("Fatigue - Category: ...").
    std::string lead = clean_value(std::string_view(line).substr(0, starts[0]));
    while (!lead.empty() && (lead.back() == '-' || lead.back() == ':')) {
      lead.pop_back();
      lead = clean_value(lead);
    }

    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::size_t end =
          i + 1 < labels.size() ? starts[i + 1] : line.size();
      std::string value = clean_value(
          std::string_view(line).substr(labels[i].second, end - labels[i].second));
      const std::string& name = labels[i].first;
      std::string* slot = nullptr;
      if (name == "category") {
        slot = &current.category;
      } else if (name.find("manifestation") != std::string::npos) {
        slot = &current.manifestation;
      } else {
        slot = &current.trend;
      }
      if (!slot->empty()) {
        flush_symptom(current, out);
        slot = name == "category" ? &current.category
               : name.find("manifestation") != std::string::npos
                   ? &current.manifestation
                   : &current.trend;
      }
      if (i == 0 && !lead.empty()) {
        if (current.has_fields || !current.title.empty()) {
          flush_symptom(current, out);
        }
        current.title = lead;
      }
      *slot = std::move(value);
      current.has_fields = true;
    }
  }
  flush_symptom(current, out);
  return out;
}

int parse_age(std::string_view body) {
  static const std::regex kYears(
      R"((\d{1,3})\s*-?\s*(years?|yrs?|y/o|yo\b|year-old))", std::regex::icase);
  static const std::regex kInfant(R"((\d{1,3})\s*-?\s*(months?|weeks?|days?))",
                                  std::regex::icase);
  static const std::regex kBare(R"(\b(\d{1,3})\b)");
  auto search = [](const std::string& s, const std::regex& re)
      -> std::optional<int> {
    std::smatch m;
    if (std::regex_search(s, m, re)) return std::stoi(m[1].str());
    return std::nullopt;
  };
  for (std::string_view raw : text::split_lines(body)) {
    std::string line = strip_markdown(raw);
    if (!text::istarts_with(line, "age")) continue;
    if (auto y = search(line, kYears)) return *y;
    if (search(line, kInfant)) return 0;
    if (auto b = search(line, kBare)) return *b;
  }
  const std::string all(body);
  if (auto y = search(all, kYears)) return *y;
  if (search(all, kInfant)) return 0;
  return -1;
}

std::string parse_gender(std::string_view body) {
  static const std::regex kFemale(R"(\b(female|woman|girl)\b)",
                                  std::regex::icase);
  static const std::regex kMale(R"(\b(male|man|boy)\b)", std::regex::icase);
  const std::string all(body);
  std::smatch f;
  std::smatch m;
  const bool has_f = std::regex_search(all, f, kFemale);
  const bool has_m = std::regex_search(all, m, kMale);
  if (has_f && (!has_m || f.position(0) <= m.position(0))) return "female";
  if (has_m) return "male";
  return "unspecified";
}

std::string parse_occupation(std::string_view body) {
  static const std::regex kOccupation(R"(occupation[^:\n]*:\s*([^,;.\n]*))",
                                      std::regex::icase);
  const std::string all = text::replace_all(std::string(body), "**", "");
  std::smatch m;
  if (!std::regex_search(all, m, kOccupation)) return {};
  return std::string(text::trim(m[1].str()));
}

}  // namespace

std::string_view to_string(Trend trend) {
  switch (trend) {
    case Trend::kWorsening:
      return "worsening";
    case Trend::kImproving:
      return "improving";
    case Trend::kStable:
      return "stable";
  }
  return "stable";
}

Trend trend_from_string(std::string_view s) {
  if (s == "worsening") return Trend::kWorsening;
  if (s == "improving") return Trend::kImproving;
  if (s == "stable") return Trend::kStable;
  throw ParseError("unknown trend \"" + std::string(s) + "\"");
}

std::string_view section_title(CaseSection section) {
  switch (section) {
    case CaseSection::kBasicInformation:
      return "Basic Information";
    case CaseSection::kPastHistory:
      return "Past Medical History & Personal History";
    case CaseSection::kChiefComplaint:
      return "Chief Complaint and History of Present Illness";
    case CaseSection::kSymptomList:
      return "Symptom List";
    case CaseSection::kPhysicalExamination:
      return "Physical Examination Summary";
    case CaseSection::kAuxiliaryExamination:
      return "Auxiliary Examination Results";
  }
  return "?";
}

std::map<CaseSection, std::string> split_case_sections(
    std::string_view document) {
  std::map<CaseSection, std::string> sections;
  std::optional<CaseSection> current;
  for (std::string_view line : text::split_lines(document)) {
    if (auto forbidden = match_forbidden(line)) {
      throw ForbiddenSectionError("case document contains a \"" +
                                  std::string(*forbidden) + "\" section");
    }
    if (auto header = match_header(line)) {
      current = header;
      sections.try_emplace(*header);
      continue;
    }
    if (current) {
      std::string& body = sections[*current];
      body.append(line);
      body.push_back('\n');
    }
  }
  return sections;
}

ParsedCase parse_case_document(std::string_view document) {
  ParsedCase parsed;
  parsed.sections = split_case_sections(document);
  for (CaseSection required :
       {CaseSection::kBasicInformation, CaseSection::kSymptomList}) {
    if (!parsed.sections.contains(required)) {
      throw MissingSectionError("case document has no \"" +
                                std::string(section_title(required)) +
                                "\" section");
    }
  }
  const std::string& basic = parsed.sections[CaseSection::kBasicInformation];
  parsed.demographics.age = parse_age(basic);
  parsed.demographics.gender = parse_gender(basic);
  parsed.demographics.occupation = parse_occupation(basic);
  if (auto it = parsed.sections.find(CaseSection::kPastHistory);
      it != parsed.sections.end()) {
    parsed.demographics.history_notes = std::string(text::trim(it->second));
  }
  parsed.symptoms = parse_symptoms(parsed.sections[CaseSection::kSymptomList]);
  return parsed;
}

std::string render_case_prompt(const DiseaseNode& disease,
                               std::string_view passage) {
  if (text::trim(passage).empty()) {
    throw PreconditionError("case prompt needs a non-empty disease passage");
  }
  std::string features;
  for (const auto& s : disease.symptoms) {
    features += "- " + s.name +
                (s.typicality == Typicality::kCore ? " (core)\n"
                                                   : " (supporting)\n");
  }
  if (features.empty()) features = "- (none listed)\n";
  features.pop_back();
  return prompts::fill(prompts::kCaseGeneration,
                       {{"disease_description", std::string(passage)},
                        {"kg_symptoms", features}});
}

bool symptom_matches(std::string_view case_symptom,
                     std::string_view kg_symptom) {
  static const std::set<std::string> kStop{"and", "or",  "the", "a",  "an",
                                           "of",  "in",  "on",  "with", "to",
                                           "at",  "for", "my",  "i"};
  auto content = [](std::string_view s) {
    std::set<std::string> out;
    for (auto& t : text::tokenize(s)) {
      if (!kStop.contains(t)) out.insert(std::move(t));
    }
    return out;
  };
  const auto a = content(case_symptom);
  const auto b = content(kg_symptom);
  if (a.empty() || b.empty()) return false;
  return std::includes(a.begin(), a.end(), b.begin(), b.end()) ||
         std::includes(b.begin(), b.end(), a.begin(), a.end());
}

ValidationReport validate_case(const CaseProfile& profile,
                               const KnowledgeGraph& kg,
                               const ValidationOptions& options) {
  ValidationReport report;
  auto violate = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  try {
    const auto sections = split_case_sections(profile.raw_document);
    for (std::size_t i = 0; i < kCaseSectionCount; ++i) {
      const auto section = static_cast<CaseSection>(i);
      if (!sections.contains(section)) {
        violate("missing_section", "missing \"" +
                                       std::string(section_title(section)) +
                                       "\" section");
      }
    }
  } catch (const ForbiddenSectionError& e) {
    violate("forbidden_section", e.what());
  }

  if (profile.demographics.age < 0 || profile.demographics.age > 120) {
    violate("age_out_of_range",
            "age " + std::to_string(profile.demographics.age) +
                " outside 0-120");
  }

  if (profile.symptoms.empty()) violate("no_symptoms", "symptom list is empty");
  for (const auto& s : profile.symptoms) {
    if (text::trim(s.manifestation).empty()) {
      violate("empty_manifestation", "symptom with an empty manifestation");
    }
  }

  const DiseaseNode* node = kg.find(profile.disease_id);
  if (!node) {
    violate("unknown_disease", "disease id " + profile.disease_id +
                                   " is not in the knowledge graph");
  } else if (!profile.symptoms.empty()) {
    std::size_t matched = 0;
    for (const auto& s : profile.symptoms) {
      const bool hit = std::any_of(
          node->symptoms.begin(), node->symptoms.end(),
          [&](const SymptomEdge& e) {
            return symptom_matches(s.manifestation, e.name);
          });
      if (hit) ++matched;
    }
    report.overlap_ratio = static_cast<double>(matched) /
                           static_cast<double>(profile.symptoms.size());
    if (report.overlap_ratio < options.overlap_threshold) {
      violate("low_symptom_overlap",
              std::to_string(matched) + " of " +
                  std::to_string(profile.symptoms.size()) +
                  " symptoms match the knowledge graph");
    }
  }

  report.passed = report.violations.empty();
  return report;
}

CaseProfile generate_case_for(const KnowledgeBase& kb,
                              const DiseaseNode& disease,
                              ChatBackend& generator,
                              const GenerationOptions& options) {
  if (options.max_attempts < 1) {
    throw PreconditionError("max_attempts must be at least 1");
  }
  const std::string& passage = kb.encyclopedia.passage(disease.id);
  const std::string prompt = render_case_prompt(disease, passage);

  std::vector<ChatMessage> messages{{ChatRole::kUser, prompt}};
  std::string last_problem;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    const std::string document = generator.complete(
        ChatRequest::evaluation(messages, generator.model_id()));
    try {
      ParsedCase parsed = parse_case_document(document);
      CaseProfile profile;
      profile.disease_id = disease.id;
      profile.disease_text = passage;
      profile.demographics = std::move(parsed.demographics);
      profile.symptoms = std::move(parsed.symptoms);
      profile.raw_document = document;
      ValidationReport report = validate_case(profile, kb.graph, options.validation);
      if (report.passed) return profile;
      last_problem.clear();
      for (const auto& v : report.violations) {
        last_problem += v.code + ": " + v.message + "; ";
      }
    } catch (const ParseError& e) {
      last_problem = e.what();
    }
    messages.push_back({ChatRole::kAssistant, document});
    messages.push_back(
        {ChatRole::kUser,
         "The case document failed validation (" + last_problem +
             "). Regenerate the complete case with all six sections."});
  }
  throw CaseValidationError("case for " + disease.id + " failed validation " +
                            std::to_string(options.max_attempts) +
                            " times; last problem: " + last_problem);
}

CaseProfile generate_case(const KnowledgeBase& kb, ChatBackend& generator,
                          std::uint64_t seed,
                          const GenerationOptions& options) {
  return generate_case_for(kb, sample_disease(kb.graph, seed), generator,
                           options);
}

}  // namespace dxsim
