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

#include "dxsim/prompts.h"

#include <regex>

#include "dxsim/error.h"
#include "dxsim/text.h"

namespace dxsim::prompts {

const std::string_view kCaseGeneration =
    R"(Please generate a structurally rigorous, clinically authentic, and medically educationally compliant "Standardized Patient Case" based on the following disease description. The case must only contain the following six specified sections. It is strictly prohibited to include diagnostic conclusions or treatment recommendations.

1. Basic Information
   - Age and Gender: Set reasonably based on the epidemiological characteristics of the disease (e.g., common age of onset, gender predisposition, genetic pattern).
   - Occupation/Status, Marital Status, Place of Residence: Be concise (1-2 sentences).
   - Family Genetic History (if applicable): Specify kinship (e.g., "father," "aunt"), specific disease manifestations, and age of onset.

2. Past Medical History & Personal History
   - Past major illnesses, surgeries, trauma, infection history (briefly described in chronological order).
   - Allergy history (drug/food/environmental), vaccination history (key vaccines only).
   - Personal living habits: Smoking/alcohol (amount and duration), exercise capacity, diet routine, etc.
   - History of growth and development or psychosocial history (if disease-related, briefly describe key events or states).

3. Chief Complaint and History of Present Illness
   - Chief Complaint: Describe in the patient's first-person tone, not exceeding 20 words, focusing on the most significant discomfort (e.g., "I have had chest tightness and pain for two weeks").
   - History of Present Illness: Narrate along the timeline - time of onset, possible triggers, symptom evolution process (including key time points), aggravating/alleviating factors, and current functional status. Must reflect the natural course of the disease.

4. Symptom List (Structured Presentation)
   - Each symptom must include the following three elements:
     - Category (e.g., local signs, pain characteristics, functional impairment, systemic symptoms, etc.)
     - Specific Manifestation (including details such as location, nature, intensity, frequency, duration, etc.)
     - Dynamic Trend (progressively worsening / gradually alleviating / remaining stable)

5. Physical Examination Summary (Described by Systems)
   - List only key positive signs and negative signs of differential significance. Briefly describe according to the following four categories:
     - Inspection: Appearance abnormalities, skin changes, masses, deformities, etc.
     - Palpation: Tenderness, texture, boundaries, mobility, temperature, etc.
     - Motion Examination: Range of motion of joints, muscle strength grading, reflex status, coordination, etc.
     - Measurement: Lesion size, quantity, precise anatomical location (if applicable).

6. Auxiliary Examination Results (Simulating Real Reports)
   - List completed key examinations and their objective, quantitative results. Ensure they align with the typical manifestations of the disease:
     - Imaging: X-ray/MRI/CT/Ultrasound, etc. (include key descriptions)
     - Laboratory Tests: Complete blood count, biochemical indicators, inflammation markers, tumor markers, etc. (provide qualitatively, no specific numerical values needed)
     - Pathological/Genetic Testing (if performed): Histological description or name of gene mutation
     - Other Specialized Examinations: e.g., nerve conduction velocity, pulmonary function tests, electrocardiogram, etc. (include key parameters)

All content must be clinically authentic, with specific data, and logically self-consistent. Fabrication of diagnoses or treatments is prohibited.

Disease description:
{disease_description}

The case must reflect these clinical features of the disease:
{kg_symptoms})";

const std::string_view kPatientOpening =
    R"(You are a standardized patient who firmly believes you have the following illness: {disease_description}.

Based on this disease, simulate your first verbal complaint when meeting the doctor - designed to test the physician's diagnostic ability.

Instructions:
1. State only 1-2 main symptoms. Keep it simple and brief.
2. Do not reveal the diagnosis. Avoid disease names or textbook terms.
3. Only 1-2 sentences max. Preferably just one short, natural sentence.
4. Use colloquial, everyday language - as a real patient would speak. No medical jargon.
5. Withhold all other symptoms. Wait for the doctor to ask follow-up questions.

Example:
"I've had this nasty cough for over a week and I'm really tired all the time.")";

const std::string_view kDoctor =
    R"(You are a professional physician. Based on the patient's consultation record, you must make a clinical judgment. Your goal is to simulate a routine outpatient visit: rule out similar diseases and diagnose the patient's condition. You may choose from the following actions:

1. Ask the patient for information, formatted as: [!Ask!](your question) - only one question per turn.
2. Perform a physical examination, formatted as: [!Exam!](the specific physical exam item you need) - only one item per turn.
3. Order an auxiliary test, formatted as: [!Test!](the specific test you require) - only one test per turn.
4. Provide a diagnosis, formatted as: [!Diagnosis!](your diagnosis) - must be a single, specific disease name.

You may perform only one action per turn. Once you issue a diagnosis, it will be considered your final answer, and you will no longer be able to ask additional questions or order further tests.

You must think before answering. Please strictly follow the response format below:

Thought: (your reasoning process)
Action: [!Ask!](your question) OR [!Exam!](your physical exam item) OR [!Test!](your test request) OR [!Diagnosis!](your diagnosis)

Consultation record as follows: {chat_history}

Based on this information, provide your thought and action. You may ask only one question or request only one test/exam.)";

const std::string_view kExaminer =
    R"(You are a medical technologist. Your task is to generate examination result reports based on the clinician's requested tests, the disease encyclopedia description, and existing patient information - combined with your own medical knowledge of the disease.

The patient's disease description is: {disease_description}

The examination(s) requested by the doctor: {doctor_examination}

For any examination lacking specific data, you must respond in the format of a professional hospital laboratory or diagnostic report. Based on the requested examination and your understanding of the disease, provide a medically plausible result description.

Guidelines:
1. Respond directly to the doctor's request - no additional information.
2. Describe results objectively. Do not include biased interpretations, disease names, or treatment suggestions.
3. For numerical results, only indicate: normal, elevated, or reduced - do not provide exact values.
4. For examinations unrelated to the disease, respond with "normal".
5. Strictly follow the output format:
   [!Positive!](your result) or [!Negative!](your result)
6. Format your response as a professional hospital examination report. Include only the result for the current test item - no extraneous content.
7. If multiple tests are requested, respond to each one separately, one per line. Example:
[!Positive!](ECG result: Sinus rhythm, normal heart rate.)
[!Negative!](C-reactive protein: Within normal range.))";

const std::string_view kPatient =
    R"(You are an standardized patient who firmly believes you have the following illness: {disease_description}.

Based on this disease description, carefully consider your symptoms and respond to the doctor's question: {doctor_question}.

Please follow these principles when answering:
1. Your answer should directly respond to the doctor's question. Simulate a real patient's response as realistically as possible, to evaluate the doctor's clinical competence.
2. Only answer the current question - no extra information. Avoid overly professional or obscure language. Do not include any irrelevant content.
3. Do not copy verbatim from the disease description above. Express your symptoms in colloquial, everyday, and layperson-friendly language.
4. If the doctor asks multiple questions at once, answer each one separately. Each answer must follow the above principles.
5. Strictly follow the output format below:
   [!Positive!](your response) or [!Negative!](your response)

First, judge whether the doctor's question is relevant to your disease and whether the symptom mentioned applies to you. If relevant, begin with [!Positive!]. If not relevant, begin with [!Negative!]. Then state your response in natural language.

For multiple questions, respond to each on a separate line. Example:
[!Positive!](I feel a bit of pain in my chest.)
[!Negative!](I don't feel dizzy at all.))";

const std::string_view kJudge =
    R"(You are a senior clinical expert with over 15 years of clinical experience. You are now appointed to conduct a rigorous professional evaluation of the following doctor's consultation record and clinical reasoning process. Your scoring will be used for medical quality retrospective analysis and case review, and you must ensure that the scoring criteria are aligned with clinical practice requirements.

Please score the consultation content item by item according to the following 7 dimensions. Each score must be an integer and determined based on clear evidence of clinical behavior. The basis for scoring must strictly follow the standards listed below, without any lenient interpretation or subjective inference.

Output Format Requirements:
- Output only standard JSON. The field order and structure must be strictly as follows, with no comments, line breaks, or extra text:
{
  "Depth of Chief Complaint Inquiry": score,
  "Completeness of Medical History": score,
  "Integrity of Evidence Chain": score,
  "Appropriateness of Examinations": score,
  "Differential Diagnosis": score,
  "Diagnostic Accuracy": score,
  "Uncertainty Management": score
}

Scoring Dimensions and Attainment Standards:

1. Depth of Chief Complaint Inquiry (Max 10 points)
   - 10 points: Structurally collected symptom characteristics (onset, nature, location, intensity, triggers, relieving factors, associated symptoms), and identified at least one "red flag" sign (e.g., chest pain with cold sweats, headache with altered consciousness).
   - 6 points: Covered basic symptom elements but did not systematically inquire about specific features or failed to identify red flags.
   - 4 points: Only recorded the patient's own words without clarifying vague descriptions (e.g., "stomach discomfort" without specifying location/nature).
   - 2 points: The description of the chief complaint is general, omitting key symptom dimensions.
   - 0 points: Failed to identify symptoms requiring emergency intervention (e.g., did not ask about radiation for chest pain, or respiratory distress at rest).
   - Deduction Triggers: Failure to actively probe -> max 3 points; Failure to record symptom duration or frequency -> max 2 points.

2. Completeness of Medical History (Max 10 points)
   - Medical history includes: history of present illness, past medical history, medication history, allergy history, family history, and social history. 2 points are awarded for each section covered, up to a maximum of 10 points.

3. Integrity of Evidence Chain (Max 20 points)
   - 20 points: Every clinical judgment (e.g., "considering infection," "leaning towards cardiogenic") is supported by corresponding symptoms, signs, or examination results. The reasoning chain is complete and logical.
   - 15 points: One judgment is weakly supported by evidence (e.g., diagnosing "pneumonia" without fever or lung auscultation records).
   - 10 points: Key diagnostic hypotheses lack direct evidence (e.g., diagnosing "cholecystitis" without recording Murphy's sign).
   - 5 points: Subjective inferences are present (e.g., "patient is anxious" without a HAMA score or behavioral description).
   - <=2 points: Multiple conclusions lack objective basis, or non-evidence-based statements like "based on experience" or "it feels like" are used.
   - Deduction Triggers: Using "possibly" or "maybe" without noting the uncertainty -> max 3 points; Diagnosis contradicts recorded information -> 0 points.

4. Appropriateness of Examinations (Max 10 points)
   - 10 points: Examinations are precisely matched with differential diagnoses, comply with clinical pathways/guidelines, no core tests are missed, no unnecessary over-testing, and indications for tests are clearly recorded.
   - 8 points: One test has an unclear indication, or one low-priority test is delayed (e.g., not immediately checking amylase for general abdominal pain).
   - 6 points: Obvious over-testing (e.g., ordering an MRI for a young patient with a headache without indications) or omission of high-risk screening (e.g., not checking for pregnancy in a woman of childbearing age with abdominal pain).
   - 4 points: Tests are weakly related to the chief complaint or their clinical purpose is not stated.
   - <=2 points: The combination of tests is illogical, or key tests for high-risk patients are not prioritized (e.g., not performing an ECG for chest pain).
   - Deduction Triggers: Failure to state the purpose of a test -> -1 point; Failure to arrange core tests for a critical patient at the first visit -> max 2 points.

5. Differential Diagnosis (Max 10 points)
   - 10 points: Listed >=3 reasonable differential diagnoses, including "highly lethal but treatable" conditions (e.g., ACS, pulmonary embolism, stroke, ectopic pregnancy), ranked by clinical probability, with supporting or refuting evidence for each.
   - 8 points: Listed 3 differential diagnoses but without ranking or with insufficient justification for exclusion.
   - 6 points: Listed only 2 differential diagnoses, failing to include a must-not-miss critical condition.
   - 3-5 points: Listed only 1 differential diagnosis, or the differential is clearly unreasonable.
   - <=3 points: No differential diagnosis was made, or a "red flag" disease that must be ruled out was missed.
   - Deduction Triggers: Failure to consider the most dangerous diagnosis for the symptom spectrum (e.g., not considering subarachnoid hemorrhage for a headache) -> 0 points.

6. Diagnostic Accuracy (Max 30 points)
   - 30 points: The final diagnosis is highly consistent with all clinical evidence, aligns with the latest clinical guidelines, and has no logical contradictions. If evidence is insufficient, it is clearly marked as a "preliminary diagnosis" or "to be ruled out," with justification.
   - 20-29 points: The diagnosis is correct but the confidence level is not fully explained, key differentials are not systematically excluded, or the "preliminary" status is not marked when evidence is slightly insufficient.
   - 15-20 points: The diagnosis is generally correct but omits important comorbidities or complications (e.g., pneumonia without mentioning pleural effusion, diabetes without mentioning ketosis proneness), or some inferences lack direct evidence.
   - 10-15 points: The diagnostic direction is partially incorrect or vague (e.g., misdiagnosing "cholecystitis" as "gastritis"), but does not involve missing a high-risk disease and does not lead to significant clinical risk.
   - 5-9 points: The diagnosis contradicts key positive signs/test results (e.g., diagnosing gastritis when ECG suggests MI), or ignores red flags that must be addressed.
   - 0-4 points: The diagnosis is seriously wrong, potentially leading to life-threatening danger or irreversible harm (e.g., misdiagnosing "aortic dissection" as "muscle strain," "ectopic pregnancy" as "irregular menstruation").
   - Deduction Triggers:
     - Diagnosis contradicts objective records -> score is directly <=4 points.
     - Insufficient evidence but not labeled as "preliminary diagnosis" -> max 25 points.
     - Missing a "must-not-miss" high-risk disease (e.g., not considering ACS for chest pain) -> max 17 points.
     - Using a vague diagnosis to cover uncertainty (e.g., "it could be XX" without a verification plan) -> max 24 points.

7. Uncertainty Management (Max 10 points)
   - 10 points: Clearly identified the source of uncertainty in diagnosis or prognosis, developed a specific verification plan (e.g., "follow-up within 72 hours," "upgrade to imaging if no improvement"), and documented risk communication with the patient.
   - 7 points: Mentioned uncertainty and has a follow-up plan, but without quantified timeframes or verification methods.
   - 5-6 points: Used only vague terms like "observe" or "follow-up" with no specific action items.
   - 3-4 points: Used absolute language to conceal uncertainty (e.g., "it's definitely not cancer," "no problem").
   - <=2 points: Completely failed to mention uncertainty or gave the patient misleading assurances.
   - Deduction Triggers: Failure to document risk communication or the informed consent process -> max 3 points; Failure to arrange a clear follow-up mechanism for a high-risk patient -> max 4 points.

Reiteration of Evaluation Principles:
- All scoring must be based on verifiable text records. Do not assume "the doctor might have done it but didn't write it down."
- High-weight dimensions (Diagnostic Accuracy, Differential Diagnosis, Diagnostic Uncertainty) use a "defect-sensitive" scoring method - a critical omission or error will lead to a sharp drop in the score.
- As the evaluating expert, your scores will be entered into the physician's competency file and the medical safety database. You are responsible for the clinical reasonableness and legal rigor of your evaluation.

Please evaluate the following consultation record based on the above criteria:
Consultation Record: {dialogue}

The model's diagnosis is: {prediction}
The correct answer is: {diagnosis}

Please provide your answer. Do not include any content other than the JSON formatted score.)";

const std::string_view kDataQuality =
    R"(Please rigorously assess whether the "patient statements" and "examination findings" in the following dialogue satisfy the following two criteria:

1. Clinical Fidelity: whether the patient's self-reported symptoms and examination findings are consistent with the typical clinical presentation or medical logic of the disease "{diagnosis}". The chief complaint, symptoms, physical signs, and auxiliary test results should align with established medical knowledge regarding this condition. Irrelevant questions or unnecessary tests ordered by the doctor should not affect your judgment; you are evaluating only whether the patient's and examiner's responses themselves are medically coherent.
2. Information Leakage: whether the patient or examination results explicitly or implicitly reveal the ground-truth diagnosis before the doctor infers it. Reasonable symptom descriptions that match the disease but do not name it are acceptable; explicit statements of the diagnosis constitute leakage. If a test naturally contains a diagnostic conclusion (e.g., pathology results, radiology impression), this is considered medically appropriate and does not count as leakage.

Please output your decision in the following strict JSON format:
{
  "Medical_Plausibility": 0 or 1,
  "No_Diagnostic_Leakage": 0 or 1
}

Dialogue content: {dialogue}

Ground-truth diagnosis: {diagnosis})";

std::string fill(std::string_view tmpl,
                 const std::map<std::string, std::string>& values) {
  std::string out(tmpl);
  for (const auto& [slot, value] : values) {
    if (text::trim(value).empty()) {
      throw ProtocolError(ProtocolErrorKind::kMissingSlot,
                          "empty value for prompt slot {" + slot + "}");
    }
  }
  // Single left-to-right pass so substituted text is never rescanned.
  static const std::regex kSlot(R"(\{([a-z_]+)\})");
  std::string result;
  auto begin = std::sregex_iterator(out.begin(), out.end(), kSlot);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    auto found = values.find(m[1].str());
    if (found == values.end()) {
      throw ProtocolError(ProtocolErrorKind::kMissingSlot,
                          "no value for prompt slot {" + m[1].str() + "}");
    }
    result.append(out, last, static_cast<std::size_t>(m.position(0)) - last);
    result.append(found->second);
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  result.append(out, last, std::string::npos);
  return result;
}

}  // namespace dxsim::prompts
