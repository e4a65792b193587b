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

// Prompt templates. Slots are written as {name}.

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace dxsim::prompts {

extern const std::string_view kCaseGeneration;    // {disease_description} {kg_symptoms}
extern const std::string_view kPatientOpening;    // {disease_description}
extern const std::string_view kDoctor;            // {chat_history}
extern const std::string_view kExaminer;          // {disease_description} {doctor_examination}
extern const std::string_view kPatient;           // {disease_description} {doctor_question}
extern const std::string_view kJudge;             // {dialogue} {prediction} {diagnosis}
extern const std::string_view kDataQuality;       // {dialogue} {diagnosis}

/// Replaces every {slot} named in `values`; any other {slot} left in the
/// template is an error, as is an empty value. Throws ProtocolError
/// (kMissingSlot).
std::string fill(std::string_view tmpl,
                 const std::map<std::string, std::string>& values);

}  // namespace dxsim::prompts
