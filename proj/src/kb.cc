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

#include "dxsim/kb.h"

#include <fstream>
#include <random>
#include <sstream>

#include "dxsim/error.h"
#include "dxsim/text.h"

namespace dxsim {

using nlohmann::json;

namespace {

Typicality typicality_from(const std::string& s) {
  if (s == "core") return Typicality::kCore;
  if (s == "supporting") return Typicality::kSupporting;
  throw ParseError("unknown symptom typicality \"" + s + "\"");
}

std::string_view typicality_name(Typicality t) {
  return t == Typicality::kCore ? "core" : "supporting";
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(std::vector<DiseaseNode> diseases)
    : diseases_(std::move(diseases)) {
  for (std::size_t i = 0; i < diseases_.size(); ++i) {
    const DiseaseNode& node = diseases_[i];
    if (node.id.empty()) throw ParseError("disease with empty id");
    if (text::trim(node.canonical_name).empty()) {
      throw ParseError("disease " + node.id + " has an empty name");
    }
    if (!by_id_.emplace(node.id, i).second) {
      throw ParseError("duplicate disease id " + node.id);
    }
    std::set<std::string> seen;
    for (const auto& alias : node.aliases) {
      if (!seen.insert(alias).second) {
        throw ParseError("disease " + node.id + " repeats alias \"" + alias +
                         "\"");
      }
    }
    if (node.symptoms.empty()) {
      throw ParseError("disease " + node.id + " has no symptoms");
    }
    for (const auto& s : node.symptoms) {
      if (text::trim(s.name).empty()) {
        throw ParseError("disease " + node.id + " has an unnamed symptom");
      }
      auto& ids = symptom_index_[s.name];
      if (ids.empty() || ids.back() != node.id) ids.push_back(node.id);
    }
  }
}

const DiseaseNode* KnowledgeGraph::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &diseases_[it->second];
}

const DiseaseNode& KnowledgeGraph::at(std::string_view id) const {
  if (const DiseaseNode* node = find(id)) return *node;
  throw NotFoundError("unknown disease id " + std::string(id));
}

const std::string& Encyclopedia::passage(std::string_view disease_id) const {
  auto it = entries.find(disease_id);
  if (it == entries.end()) {
    throw NotFoundError("no encyclopedia entry for " + std::string(disease_id));
  }
  return it->second;
}

KnowledgeGraph graph_from_json(const json& doc) {
  try {
    std::vector<DiseaseNode> nodes;
    for (const auto& d : doc.at("diseases")) {
      DiseaseNode node;
      node.id = d.at("id").get<std::string>();
      node.canonical_name = d.at("name").get<std::string>();
      if (d.contains("aliases")) {
        node.aliases = d.at("aliases").get<std::vector<std::string>>();
      }
      for (const auto& s : d.at("symptoms")) {
        node.symptoms.push_back(
            {s.at("name").get<std::string>(),
             typicality_from(s.value("typicality", std::string("core")))});
      }
      nodes.push_back(std::move(node));
    }
    return KnowledgeGraph(std::move(nodes));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed graph document: ") + e.what());
  }
}

json graph_to_json(const KnowledgeGraph& kg) {
  json diseases = json::array();
  for (const auto& node : kg.diseases()) {
    json symptoms = json::array();
    for (const auto& s : node.symptoms) {
      symptoms.push_back(
          {{"name", s.name}, {"typicality", typicality_name(s.typicality)}});
    }
    diseases.push_back({{"id", node.id},
                        {"name", node.canonical_name},
                        {"aliases", node.aliases},
                        {"symptoms", std::move(symptoms)}});
  }
  return {{"diseases", std::move(diseases)}};
}

Encyclopedia encyclopedia_from_json(const json& doc, const KnowledgeGraph& kg) {
  Encyclopedia enc;
  try {
    for (const auto& e : doc.at("entries")) {
      auto id = e.at("disease_id").get<std::string>();
      auto passage = e.at("text").get<std::string>();
      if (!kg.find(id)) {
        throw DanglingReferenceError(
            "encyclopedia entry references unknown disease id " + id);
      }
      if (text::trim(passage).empty()) {
        throw ParseError("empty encyclopedia passage for " + id);
      }
      if (!enc.entries.emplace(id, std::move(passage)).second) {
        throw ParseError("duplicate encyclopedia entry for " + id);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed encyclopedia document: ") +
                     e.what());
  }
  return enc;
}

json encyclopedia_to_json(const Encyclopedia& enc) {
  json entries = json::array();
  for (const auto& [id, passage] : enc.entries) {
    entries.push_back({{"disease_id", id}, {"text", passage}});
  }
  return {{"entries", std::move(entries)}};
}

KnowledgeBase load_knowledge_base(
    const std::filesystem::path& graph_path,
    const std::filesystem::path& encyclopedia_path) {
  KnowledgeBase kb;
  kb.graph = graph_from_json(read_json_file(graph_path));
  if (kb.graph.empty()) {
    throw EmptyGraphError(graph_path.string() + " contains no diseases");
  }
  kb.encyclopedia =
      encyclopedia_from_json(read_json_file(encyclopedia_path), kb.graph);
  return kb;
}

void save_knowledge_base(const KnowledgeBase& kb,
                         const std::filesystem::path& graph_path,
                         const std::filesystem::path& encyclopedia_path) {
  write_json_file(graph_path, graph_to_json(kb.graph));
  write_json_file(encyclopedia_path, encyclopedia_to_json(kb.encyclopedia));
}

const DiseaseNode& sample_disease(const KnowledgeGraph& kg,
                                  std::uint64_t seed) {
  if (kg.empty()) throw EmptyGraphError("cannot sample from an empty graph");
  // mt19937_64's output sequence is fixed by the standard, unlike the
  // distribution classes, so this is reproducible across toolchains.
  std::mt19937_64 engine(seed);
  return kg.diseases()[engine() % kg.size()];
}

std::set<std::string> symptom_neighbors(const KnowledgeGraph& kg,
                                        std::string_view disease_id) {
  std::set<std::string> names;
  for (const auto& s : kg.at(disease_id).symptoms) names.insert(s.name);
  return names;
}

}  // namespace dxsim
