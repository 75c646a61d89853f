#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "tick/evaluator.hpp"
#include "tick/serialize.hpp"
#include "tick/types.hpp"

namespace tick {
namespace {

AnswerRecord record(std::size_t index, std::vector<BinaryAnswer> votes) {
  return AnswerRecord(index, std::move(votes), {}, {});
}

ChecklistEvaluation evaluation_from(const std::string& id, const std::vector<bool>& answers) {
  std::vector<AnswerRecord> records;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    records.push_back(record(i, {answers[i] ? BinaryAnswer::kYes : BinaryAnswer::kNo}));
  }
  return ChecklistEvaluation(id, "r", std::move(records), answers.size());
}

Checklist two_questions(const std::string& id = "i1") {
  return Checklist(id, std::vector<std::string>{"Is it short?", "Is it polite?"}, Provenance::human());
}

TEST(RationalTest, NormalisesAndCompares) {
  EXPECT_EQ(Rational(2, 4), Rational(1, 2));
  EXPECT_EQ(Rational(3, -6).str(), "-1/2");
  EXPECT_EQ(Rational(4, 2).str(), "2");
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_EQ(Rational::parse("3/4"), Rational(3, 4));
  EXPECT_EQ(Rational::parse("5"), Rational(5));
  EXPECT_THROW(Rational(1, 0), Error);
  EXPECT_THROW(Rational::parse("x/2"), Error);
}

TEST(RationalTest, CompareDoesNotOverflow) {
  const Rational a(std::int64_t{1} << 61, (std::int64_t{1} << 61) - 1);
  const Rational b((std::int64_t{1} << 61) + 1, std::int64_t{1} << 61);
  EXPECT_GT(a, b);
}

TEST(InstructionTest, RequiresIdAndText) {
  EXPECT_THROW((Instruction{"", "text", "", {}}.validate()), Error);
  EXPECT_THROW((Instruction{"id", "", "", {}}.validate()), Error);
  EXPECT_NO_THROW((Instruction{"id", "text", "", {}}.validate()));
}

TEST(ChecklistTest, IndexesQuestionsInOrder) {
  const auto c = two_questions();
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].index, 0u);
  EXPECT_EQ(c[1].index, 1u);
  EXPECT_EQ(c[1].text, "Is it polite?");
}

TEST(ChecklistTest, RejectsNonQuestions) {
  EXPECT_THROW(Checklist("i", std::vector<std::string>{"Is it short?", "Be polite."}, Provenance::human()), Error);
  EXPECT_THROW(Checklist("i", std::vector<std::string>{}, Provenance::human()), Error);
}

TEST(ChecklistTest, GeneratedLengthBounds) {
  EXPECT_THROW(Checklist("i", std::vector<std::string>{"A?"}, Provenance::generated("m")), Error);
  EXPECT_THROW(Checklist("i", std::vector<std::string>(9, "A?"), Provenance::generated("m")), Error);
  EXPECT_NO_THROW(Checklist("i", std::vector<std::string>(8, "A?"), Provenance::generated("m")));
  // Human checklists may be any nonempty length.
  EXPECT_NO_THROW(Checklist("i", std::vector<std::string>{"A?"}, Provenance::human()));
  EXPECT_NO_THROW(Checklist("i", std::vector<std::string>(12, "A?"), Provenance::file()));
}

TEST(BinaryAnswerTest, NumericAndText) {
  EXPECT_EQ(numeric(BinaryAnswer::kYes), 1);
  EXPECT_EQ(numeric(BinaryAnswer::kNo), 0);
  EXPECT_EQ(parse_binary_answer("yes"), BinaryAnswer::kYes);
  EXPECT_EQ(parse_binary_answer("NO"), BinaryAnswer::kNo);
  EXPECT_THROW(parse_binary_answer("maybe"), Error);
}

TEST(AnswerRecordTest, StrictMajority) {
  using enum BinaryAnswer;
  EXPECT_EQ(record(0, {kYes}).answer(), kYes);
  EXPECT_EQ(record(0, {kYes, kNo, kNo}).answer(), kNo);
  EXPECT_EQ(record(0, {kYes, kNo, kYes}).answer(), kYes);
  EXPECT_EQ(record(0, {kYes, kYes, kNo, kNo, kYes}).answer(), kYes);
  EXPECT_THROW(record(0, {kYes, kNo}), Error);
  EXPECT_THROW(record(0, {}), Error);
}

TEST(AnswerRecordTest, ParseFailureFlags) {
  using enum BinaryAnswer;
  AnswerRecord r(0, {kNo, kYes, kYes}, {"a", "b", "c"}, {true, false, false});
  EXPECT_TRUE(r.any_parse_failure());
  EXPECT_EQ(r.answer(), kYes);
  EXPECT_THROW(AnswerRecord(0, {kNo}, {}, {true, false}), Error);
}

TEST(ChecklistEvaluationTest, PassRateIsExact) {
  const auto e = evaluation_from("i", {true, false, true});
  EXPECT_EQ(e.passes(), 2);
  EXPECT_EQ(e.pass_rate(), Rational(2, 3));
  EXPECT_FALSE(e.all_passed());
  EXPECT_TRUE(evaluation_from("i", {true, true}).all_passed());
}

TEST(ChecklistEvaluationTest, RecordsMustMatchChecklist) {
  const auto c = two_questions();
  EXPECT_THROW(ChecklistEvaluation(c, "r", {record(0, {BinaryAnswer::kYes})}), Error);
  EXPECT_THROW(ChecklistEvaluation(c, "r", {record(1, {BinaryAnswer::kYes}), record(0, {BinaryAnswer::kYes})}),
               Error);
}

TEST(ChecklistEvaluationTest, MatchesBruteForceOnRandomInstances) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + rng() % 10;
    std::vector<bool> answers(len);
    for (std::size_t i = 0; i < len; ++i) answers[i] = rng() % 2;
    const auto e = evaluation_from("i", answers);
    const auto expected = oracle::pass_rate(answers);
    EXPECT_EQ(e.pass_rate().num(), expected.num);
    EXPECT_EQ(e.pass_rate().den(), expected.den);
  }
}

TEST(PreferenceLabelTest, InvertAndText) {
  EXPECT_EQ(invert(PreferenceLabel::kWin), PreferenceLabel::kLoss);
  EXPECT_EQ(invert(PreferenceLabel::kTie), PreferenceLabel::kTie);
  EXPECT_EQ(parse_preference_label("Loss"), PreferenceLabel::kLoss);
  EXPECT_EQ(to_string(PreferenceLabel::kWin), "win");
}

TEST(AnnotationRecordTest, ChecklistAnswersRequiredForCheckThenScore) {
  AnnotationRecord a{"item", "ann", std::nullopt, 4, ScoringProtocol::kCheckThenScore, std::nullopt};
  EXPECT_THROW(a.validate(), Error);
  a.checklist_answers = std::vector<BinaryAnswer>{BinaryAnswer::kYes};
  EXPECT_NO_THROW(a.validate());
  a.score = 6;
  EXPECT_THROW(a.validate(), Error);
  AnnotationRecord d{"item", "ann", std::vector<BinaryAnswer>{}, 3, ScoringProtocol::kDirectScore, std::nullopt};
  EXPECT_THROW(d.validate(), Error);
  d.checklist_answers.reset();
  EXPECT_NO_THROW(d.validate());
}

RefinementTrace trace_with(const std::vector<std::vector<bool>>& per_iteration, StopReason reason) {
  RefinementTrace t;
  t.instruction_id = "i1";
  t.checklist = std::make_shared<const Checklist>(two_questions());
  for (std::size_t i = 0; i < per_iteration.size(); ++i) {
    RefinementIteration it;
    it.response = "draft " + std::to_string(i);
    it.evaluation = evaluation_from("i1", per_iteration[i]);
    if (i + 1 < per_iteration.size()) it.feedback = "feedback";
    t.iterations.push_back(std::move(it));
  }
  t.stop_reason = reason;
  return t;
}

TEST(RefinementTraceTest, NoIterationAfterAllPassed) {
  EXPECT_NO_THROW(trace_with({{true, false}, {true, true}}, StopReason::kAllPassed).validate());
  EXPECT_THROW(trace_with({{true, true}, {true, true}}, StopReason::kMaxIters).validate(), Error);
  EXPECT_THROW(trace_with({{true, false}, {false, true}}, StopReason::kAllPassed).validate(), Error);
}

TEST(RefinementTraceTest, BestIndexPrefersEarliestMaximum) {
  const auto t = trace_with({{false, false}, {true, false}, {false, true}}, StopReason::kMaxIters);
  EXPECT_EQ(t.best_index(), 1u);
}

TEST(CandidateSetTest, ArgmaxKeepsTies) {
  std::vector<std::optional<ScoreValue>> scores{Rational(1, 2), Rational(3, 4), std::nullopt, Rational(6, 8)};
  EXPECT_EQ(argmax_set(scores), (std::vector<std::size_t>{1, 3}));
  std::vector<std::optional<ScoreValue>> reals{0.5, 0.5, 0.5};
  EXPECT_EQ(argmax_set(reals), (std::vector<std::size_t>{0, 1, 2}));
  std::vector<std::optional<ScoreValue>> none{std::nullopt, std::nullopt};
  EXPECT_TRUE(argmax_set(none).empty());
}

TEST(CandidateSetTest, ValidateRecomputesSelection) {
  CandidateSet set;
  set.instruction_id = "i";
  set.selecting_scorer = "stick";
  set.candidates = {{"a", {{"stick", Rational(1, 2)}}}, {"b", {{"stick", Rational(1)}}}};
  set.selected = {1};
  EXPECT_NO_THROW(set.validate());
  set.selected = {0, 1};
  EXPECT_THROW(set.validate(), Error);
}

TEST(SerializeTest, RoundTrips) {
  const auto c = Checklist("i1", std::vector<ChecklistQuestion>{{0, "Is it short?", {"Length"}}, {1, "Is it kind?", {}}},
                           Provenance::generated("m"));
  EXPECT_EQ(decode<Checklist>(encode(c)), c);

  const auto e = evaluation_from("i1", {true, false});
  EXPECT_EQ(decode<ChecklistEvaluation>(encode(e)), e);

  const Instruction instr{"i1", "Write.", "internal", {"Tone"}};
  EXPECT_EQ(decode<Instruction>(encode(instr)), instr);

  AnnotationRecord a{"item", "ann", std::vector<BinaryAnswer>{BinaryAnswer::kYes, BinaryAnswer::kNo}, 4,
                     ScoringProtocol::kCheckThenScore, EaseFeedback::kEasier};
  EXPECT_EQ(decode<AnnotationRecord>(encode(a)), a);

  const auto t = trace_with({{true, false}, {true, true}}, StopReason::kAllPassed);
  EXPECT_EQ(decode<RefinementTrace>(encode(t)), t);

  CandidateSet set;
  set.instruction_id = "i";
  set.selecting_scorer = "external";
  set.candidates = {{"a", {{"external", 0.25}}}, {"b", {{"external", 0.75}}}};
  set.selected = {1};
  EXPECT_EQ(decode<CandidateSet>(encode(set)), set);

  EXPECT_EQ(decode<ScoreValue>(encode(ScoreValue{Rational(2, 3)})), ScoreValue{Rational(2, 3)});
}

TEST(SerializeTest, MalformedInputIsParseError) {
  try {
    decode<Instruction>(nlohmann::json{{"id", 3}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

}  // namespace
}  // namespace tick
