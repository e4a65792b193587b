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

// Small ASCII string helpers shared across modules.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dxsim::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool istarts_with(std::string_view s, std::string_view prefix);
bool icontains(std::string_view haystack, std::string_view needle);

/// Splits on '\n'; a trailing '\r' is removed from each line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Lowercased alphanumeric tokens; naive plural folding ("coughs" -> "cough").
std::vector<std::string> tokenize(std::string_view s);

/// Replaces every "{name}" occurrence.
std::string replace_all(std::string s, std::string_view from,
                        std::string_view to);

}  // namespace dxsim::text
