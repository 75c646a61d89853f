#include "tick/serialize.hpp"

namespace tick {

namespace {

std::string_view to_string(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::kGenerated: return "generated";
    case Provenance::Kind::kHuman: return "human";
    case Provenance::Kind::kFile: return "file";
  }
  return "file";
}

Provenance::Kind parse_provenance_kind(const std::string& s) {
  if (s == "generated") return Provenance::Kind::kGenerated;
  if (s == "human") return Provenance::Kind::kHuman;
  if (s == "file") return Provenance::Kind::kFile;
  throw Error(ErrorCode::kParseError, "unknown provenance '" + s + "'");
}

json encode_answers(const std::vector<BinaryAnswer>& answers) {
  json out = json::array();
  for (auto a : answers) out.push_back(std::string(to_string(a)));
  return out;
}

std::vector<BinaryAnswer> decode_answers(const json& j) {
  std::vector<BinaryAnswer> out;
  for (const auto& a : j) out.push_back(parse_binary_answer(a.get<std::string>()));
  return out;
}

// Wraps nlohmann type errors so callers see one error kind for malformed input.
template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json encode(const Rational& r) { return r.str(); }

template <>
Rational decode<Rational>(const json& j) {
  return guarded("rational", [&] { return Rational::parse(j.get<std::string>()); });
}

json encode(const Instruction& i) {
  json j{{"id", i.id}, {"text", i.text}, {"source", i.source}};
  if (!i.categories.empty()) j["categories"] = i.categories;
  return j;
}

template <>
Instruction decode<Instruction>(const json& j) {
  return guarded("instruction", [&] {
    Instruction i;
    i.id = j.at("id").get<std::string>();
    i.text = j.at("text").get<std::string>();
    i.source = j.value("source", "");
    if (j.contains("categories")) i.categories = j.at("categories").get<std::set<std::string>>();
    i.validate();
    return i;
  });
}

json encode(const Checklist& c) {
  json questions = json::array();
  for (const auto& q : c.questions()) {
    json jq{{"text", q.text}};
    if (!q.categories.empty()) jq["categories"] = q.categories;
    questions.push_back(std::move(jq));
  }
  json prov{{"kind", to_string(c.provenance().kind)}};
  if (c.provenance().kind == Provenance::Kind::kGenerated) prov["model_id"] = c.provenance().model_id;
  return json{{"instruction_id", c.instruction_id()}, {"questions", questions}, {"provenance", prov}};
}

template <>
Checklist decode<Checklist>(const json& j) {
  return guarded("checklist", [&] {
    std::vector<ChecklistQuestion> questions;
    for (const auto& jq : j.at("questions")) {
      ChecklistQuestion q;
      if (jq.is_string()) {
        q.text = jq.get<std::string>();
      } else {
        q.text = jq.at("text").get<std::string>();
        if (jq.contains("categories")) q.categories = jq.at("categories").get<std::set<std::string>>();
      }
      questions.push_back(std::move(q));
    }
    Provenance prov = Provenance::file();
    if (j.contains("provenance")) {
      const auto& jp = j.at("provenance");
      prov.kind = parse_provenance_kind(jp.at("kind").get<std::string>());
      prov.model_id = jp.value("model_id", "");
    }
    return Checklist(j.value("instruction_id", ""), std::move(questions), prov);
  });
}

json encode(const AnswerRecord& r) {
  json flags = json::array();
  for (bool f : r.parse_failures()) flags.push_back(f);
  return json{{"question_index", r.question_index()},
              {"answer", to_string(r.answer())},
              {"votes", encode_answers(r.votes())},
              {"rationales", r.rationales()},
              {"parse_failures", flags}};
}

template <>
AnswerRecord decode<AnswerRecord>(const json& j) {
  return guarded("answer record", [&] {
    std::vector<bool> flags;
    if (j.contains("parse_failures")) {
      for (const auto& f : j.at("parse_failures")) flags.push_back(f.get<bool>());
    }
    AnswerRecord r(j.at("question_index").get<std::size_t>(), decode_answers(j.at("votes")),
                   j.value("rationales", std::vector<std::string>{}), std::move(flags));
    if (j.contains("answer") && parse_binary_answer(j.at("answer").get<std::string>()) != r.answer()) {
      throw Error(ErrorCode::kInvariantViolation, "stored answer disagrees with vote majority");
    }
    return r;
  });
}

json encode(const ChecklistEvaluation& e) {
  json records = json::array();
  for (const auto& r : e.records()) records.push_back(encode(r));
  return json{{"instruction_id", e.instruction_id()},
              {"response_id", e.response_id()},
              {"records", records},
              {"pass_rate", encode(e.pass_rate())}};
}

template <>
ChecklistEvaluation decode<ChecklistEvaluation>(const json& j) {
  return guarded("evaluation", [&] {
    std::vector<AnswerRecord> records;
    for (const auto& jr : j.at("records")) records.push_back(decode<AnswerRecord>(jr));
    const std::size_t n = records.size();
    ChecklistEvaluation e(j.at("instruction_id").get<std::string>(), j.at("response_id").get<std::string>(),
                          std::move(records), n);
    if (j.contains("pass_rate") && decode<Rational>(j.at("pass_rate")) != e.pass_rate()) {
      throw Error(ErrorCode::kInvariantViolation, "stored pass rate disagrees with records");
    }
    return e;
  });
}

json encode(const AnnotationRecord& a) {
  json j{{"item_id", a.item_id},
         {"annotator_id", a.annotator_id},
         {"score", a.score},
         {"protocol", to_string(a.protocol)}};
  if (a.checklist_answers) j["checklist_answers"] = encode_answers(*a.checklist_answers);
  if (a.ease_feedback) j["ease_feedback"] = to_string(*a.ease_feedback);
  return j;
}

template <>
AnnotationRecord decode<AnnotationRecord>(const json& j) {
  return guarded("annotation", [&] {
    AnnotationRecord a;
    a.item_id = j.at("item_id").get<std::string>();
    a.annotator_id = j.at("annotator_id").get<std::string>();
    a.score = j.at("score").get<int>();
    a.protocol = parse_scoring_protocol(j.at("protocol").get<std::string>());
    if (j.contains("checklist_answers") && !j.at("checklist_answers").is_null()) {
      a.checklist_answers = decode_answers(j.at("checklist_answers"));
    }
    if (j.contains("ease_feedback") && !j.at("ease_feedback").is_null()) {
      a.ease_feedback = parse_ease_feedback(j.at("ease_feedback").get<std::string>());
    }
    return a;
  });
}

json encode(const RefinementTrace& t) {
  json iterations = json::array();
  for (const auto& it : t.iterations) {
    json ji{{"response", it.response}, {"prompt", it.prompt}, {"feedback", it.feedback}};
    if (it.evaluation) ji["evaluation"] = encode(*it.evaluation);
    if (it.critique) ji["critique"] = *it.critique;
    iterations.push_back(std::move(ji));
  }
  json j{{"instruction_id", t.instruction_id}, {"iterations", iterations}, {"stop_reason", to_string(t.stop_reason)}};
  if (t.checklist) j["checklist"] = encode(*t.checklist);
  return j;
}

template <>
RefinementTrace decode<RefinementTrace>(const json& j) {
  return guarded("refinement trace", [&] {
    RefinementTrace t;
    t.instruction_id = j.at("instruction_id").get<std::string>();
    if (j.contains("checklist")) t.checklist = std::make_shared<const Checklist>(decode<Checklist>(j.at("checklist")));
    for (const auto& ji : j.at("iterations")) {
      RefinementIteration it;
      it.response = ji.at("response").get<std::string>();
      it.prompt = ji.value("prompt", "");
      it.feedback = ji.value("feedback", "");
      if (ji.contains("evaluation")) it.evaluation = decode<ChecklistEvaluation>(ji.at("evaluation"));
      if (ji.contains("critique")) it.critique = ji.at("critique").get<std::string>();
      t.iterations.push_back(std::move(it));
    }
    t.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    t.validate();
    return t;
  });
}

// Rationals encode as strings ("3/4"), reals as JSON numbers.
json encode(const ScoreValue& s) {
  if (std::holds_alternative<Rational>(s)) return encode(std::get<Rational>(s));
  return std::get<double>(s);
}

template <>
ScoreValue decode<ScoreValue>(const json& j) {
  if (j.is_string()) return decode<Rational>(j);
  return guarded("score", [&] { return ScoreValue(j.get<double>()); });
}

json encode(const CandidateSet& c) {
  json candidates = json::array();
  for (const auto& cand : c.candidates) {
    json scores = json::object();
    for (const auto& [scorer, value] : cand.scores) scores[scorer] = encode(value);
    candidates.push_back(json{{"text", cand.text}, {"scores", scores}});
  }
  return json{{"instruction_id", c.instruction_id},
              {"candidates", candidates},
              {"selecting_scorer", c.selecting_scorer},
              {"selected", c.selected}};
}

template <>
CandidateSet decode<CandidateSet>(const json& j) {
  return guarded("candidate set", [&] {
    CandidateSet c;
    c.instruction_id = j.at("instruction_id").get<std::string>();
    c.selecting_scorer = j.at("selecting_scorer").get<std::string>();
    c.selected = j.at("selected").get<std::vector<std::size_t>>();
    for (const auto& jc : j.at("candidates")) {
      Candidate cand;
      cand.text = jc.at("text").get<std::string>();
      for (const auto& [scorer, value] : jc.at("scores").items()) cand.scores[scorer] = decode<ScoreValue>(value);
      c.candidates.push_back(std::move(cand));
    }
    c.validate();
    return c;
  });
}

}  // namespace tick
