#pragma once

// JSON encodings of the domain types. These are the record shapes used by
// dataset files and by the run store; decode(encode(x)) == x for every type.

#include <nlohmann/json.hpp>

#include "tick/types.hpp"

namespace tick {

using json = nlohmann::json;

json encode(const Rational& r);
json encode(const Instruction& i);
json encode(const Checklist& c);
json encode(const AnswerRecord& r);
json encode(const ChecklistEvaluation& e);
json encode(const AnnotationRecord& a);
json encode(const RefinementTrace& t);
json encode(const ScoreValue& s);
json encode(const CandidateSet& c);

template <typename T>
T decode(const json& j);

template <> Rational decode<Rational>(const json& j);
template <> Instruction decode<Instruction>(const json& j);
template <> Checklist decode<Checklist>(const json& j);
template <> AnswerRecord decode<AnswerRecord>(const json& j);
template <> ChecklistEvaluation decode<ChecklistEvaluation>(const json& j);
template <> AnnotationRecord decode<AnnotationRecord>(const json& j);
template <> RefinementTrace decode<RefinementTrace>(const json& j);
template <> ScoreValue decode<ScoreValue>(const json& j);
template <> CandidateSet decode<CandidateSet>(const json& j);

}  // namespace tick
