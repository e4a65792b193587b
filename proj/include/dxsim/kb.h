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

// Disease-symptom knowledge graph and disease encyclopedia.
//
// Both are immutable after loading and may be shared read-only between
// concurrently running sessions.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dxsim {

enum class Typicality { kCore, kSupporting };

struct SymptomEdge {
  std::string name;
  Typicality typicality = Typicality::kCore;

  bool operator==(const SymptomEdge&) const = default;
};

struct DiseaseNode {
  std::string id;
  std::string canonical_name;
  /// Alternative names, including subtype names that count as a match.
  std::vector<std::string> aliases;
  std::vector<SymptomEdge> symptoms;

  bool operator==(const DiseaseNode&) const = default;
};

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  /// Validates ids, names, aliases and symptom lists. Throws ParseError.
  explicit KnowledgeGraph(std::vector<DiseaseNode> diseases);

  const std::vector<DiseaseNode>& diseases() const { return diseases_; }
  /// symptom name -> ids of diseases exhibiting it.
  const std::map<std::string, std::vector<std::string>>& symptom_index()
      const {
    return symptom_index_;
  }

  bool empty() const { return diseases_.empty(); }
  std::size_t size() const { return diseases_.size(); }

  const DiseaseNode* find(std::string_view id) const;
  /// Throws NotFoundError for an unknown id.
  const DiseaseNode& at(std::string_view id) const;

 private:
  std::vector<DiseaseNode> diseases_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::string, std::vector<std::string>> symptom_index_;
};

struct Encyclopedia {
  std::map<std::string, std::string, std::less<>> entries;

  /// Throws NotFoundError when the disease has no passage.
  const std::string& passage(std::string_view disease_id) const;
};

struct KnowledgeBase {
  KnowledgeGraph graph;
  Encyclopedia encyclopedia;
};

KnowledgeGraph graph_from_json(const nlohmann::json& doc);
nlohmann::json graph_to_json(const KnowledgeGraph& kg);

/// Cross-checks every entry against `kg` (DanglingReferenceError).
Encyclopedia encyclopedia_from_json(const nlohmann::json& doc,
                                    const KnowledgeGraph& kg);
nlohmann::json encyclopedia_to_json(const Encyclopedia& enc);

/// Loads and validates both documents. Throws ParseError,
/// DanglingReferenceError or EmptyGraphError.
KnowledgeBase load_knowledge_base(const std::filesystem::path& graph_path,
                                  const std::filesystem::path& encyclopedia_path);

/// Writes the canonical serialization (2-space indent, sorted keys).
void save_knowledge_base(const KnowledgeBase& kb,
                         const std::filesystem::path& graph_path,
                         const std::filesystem::path& encyclopedia_path);

/// Uniform draw over the graph's diseases; a pure function of (kg, seed).
const DiseaseNode& sample_disease(const KnowledgeGraph& kg, std::uint64_t seed);

/// Names attached to the node. Throws NotFoundError for an unknown id.
std::set<std::string> symptom_neighbors(const KnowledgeGraph& kg,
                                        std::string_view disease_id);

}  // namespace dxsim
