#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "tick/harness_io.hpp"
#include "tick/serialize.hpp"

namespace tick {
namespace {

using testing::error_code;
using testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Error load_error(const std::string& content) {
  TempDir dir;
  const auto path = dir.write("data.jsonl", content);
  try {
    load_dataset(path);
  } catch (const Error& e) {
    return e;
  }
  throw std::runtime_error("dataset unexpectedly loaded");
}

constexpr const char* kRecord =
    R"({"schema":1,"instruction":{"id":"a","text":"Write."},"responses":{"m2":"second","m1":"first"},)"
    R"("checklist":["Is it short?","Is it kind?"],"gold_answers":["YES","NO"],"human_preferences":[1,2,2]})";

TEST(DatasetTest, LoadsRecordsInFileOrder) {
  TempDir dir;
  const auto path = dir.write("data.jsonl", std::string(kRecord) + "\n\n" +
                                                R"({"schema":1,"instruction":{"id":"b","text":"Read."}})" + "\n");
  const auto records = load_dataset(path);
  ASSERT_EQ(records.size(), 2u);
  const auto& r = records[0];
  EXPECT_EQ(r.responses, (std::vector<std::pair<std::string, std::string>>{{"m2", "second"}, {"m1", "first"}}));
  ASSERT_TRUE(r.checklist);
  EXPECT_EQ(r.checklist->instruction_id(), "a");
  EXPECT_EQ(r.checklist->provenance().kind, Provenance::Kind::kFile);
  EXPECT_EQ(r.gold_answers->at(1), BinaryAnswer::kNo);
  EXPECT_EQ(*r.human_preferences, (std::vector<int>{1, 2, 2}));
  EXPECT_FALSE(records[1].checklist);
}

TEST(DatasetTest, RoundTripsThroughWriter) {
  TempDir dir;
  const auto records = load_dataset(dir.write("in.jsonl", std::string(kRecord) + "\n"));
  write_dataset(dir / "out.jsonl", records);
  EXPECT_EQ(load_dataset(dir / "out.jsonl"), records);
  write_dataset(dir / "again.jsonl", load_dataset(dir / "out.jsonl"));
  EXPECT_EQ(slurp(dir / "out.jsonl"), slurp(dir / "again.jsonl"));
}

TEST(DatasetTest, ErrorsCarryLineNumbers) {
  const std::string good = R"({"schema":1,"instruction":{"id":"a","text":"x"}})";
  auto e = load_error(good + "\n{not json\n");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_EQ(e.line(), 2u);

  e = load_error(good + "\n\n" + R"({"instruction":{"id":"b","text":"x"}})");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_EQ(e.line(), 3u);
  EXPECT_NE(std::string(e.what()).find("schema"), std::string::npos);

  e = load_error(R"({"schema":1,"instruction":{"id":"a"}})");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find("instruction.text"), std::string::npos);

  e = load_error(good + "\n" + good);
  EXPECT_EQ(e.code(), ErrorCode::kInvariantViolation);
  EXPECT_EQ(e.line(), 2u);
}

TEST(DatasetTest, ValidatesCrossFieldInvariants) {
  auto e = load_error(R"({"schema":1,"instruction":{"id":"a","text":"x"},"gold_answers":["YES"]})");
  EXPECT_EQ(e.code(), ErrorCode::kInvariantViolation);
  e = load_error(R"({"schema":1,"instruction":{"id":"a","text":"x"},"checklist":["Is it?"],"gold_answers":["YES","NO"]})");
  EXPECT_EQ(e.code(), ErrorCode::kInvariantViolation);
  e = load_error(R"({"schema":1,"instruction":{"id":"a","text":"x"},"human_preferences":[6]})");
  EXPECT_EQ(e.code(), ErrorCode::kInvariantViolation);
  e = load_error(R"({"schema":2,"instruction":{"id":"a","text":"x"}})");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
}

RunRecord sample_run() {
  RunRecord run;
  run.config = {{"command", "evaluate"}};
  run.artifacts.push_back({"note", "a", digest_prompt_hashes({"b", "a"}), {{"x", 1}}});
  return run;
}

TEST(RunStoreTest, PersistsAndLoads) {
  TempDir dir;
  RunStore store(dir.path());
  auto run = sample_run();
  const auto id = store.persist(run);
  EXPECT_EQ(run.run_id, id);
  EXPECT_FALSE(run.timestamp.empty());
  EXPECT_TRUE(store.exists(id));
  for (const char* f : {"meta.json", "config.json", "artifacts.jsonl", "ledger.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / id / f)) << f;
  }
  EXPECT_EQ(store.load(id), run);
}

TEST(RunStoreTest, RunIdsAreUnique) {
  TempDir dir;
  RunStore store(dir.path());
  std::set<std::string> ids;
  for (int i = 0; i < 20; ++i) {
    auto run = sample_run();
    ids.insert(store.persist(run));
  }
  EXPECT_EQ(ids.size(), 20u);
}

TEST(RunStoreTest, UnknownRunId) {
  TempDir dir;
  RunStore store(dir.path());
  EXPECT_EQ(error_code([&] { store.load("run-missing"); }), ErrorCode::kUnknownRunId);
  EXPECT_EQ(error_code([&] { store.load("../etc"); }), ErrorCode::kUnknownRunId);
  EXPECT_FALSE(store.exists("run-missing"));
}

TEST(RunStoreTest, PromptDigestIsOrderIndependent) {
  EXPECT_EQ(digest_prompt_hashes({"x", "y", "z"}), digest_prompt_hashes({"z", "x", "y"}));
  EXPECT_NE(digest_prompt_hashes({"x", "y"}), digest_prompt_hashes({"x", "z"}));
}

TEST(RunStoreTest, LedgerEncoding) {
  Ledger l;
  l.by_kind["judge"] = {3, 2, 1, 0};
  l.total = {3, 2, 1, 0};
  const auto j = encode(l);
  EXPECT_EQ(j.at("total").at("backend_calls"), 2);
  EXPECT_EQ(j.at("by_kind").at("judge").at("cache_hits"), 1);
}

ChecklistEvaluation eval(const std::string& id, std::vector<bool> answers) {
  std::vector<AnswerRecord> records;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    records.emplace_back(i, std::vector{answers[i] ? BinaryAnswer::kYes : BinaryAnswer::kNo},
                         std::vector<std::string>{});
  }
  return ChecklistEvaluation(id, "r", std::move(records), answers.size());
}

TEST(ReportTest, DrfrGroupsByLabel) {
  RunRecord run;
  run.artifacts.push_back({"evaluation", "a", "", {{"label", "m1"}, {"evaluation", encode(eval("a", {true}))}}});
  run.artifacts.push_back({"evaluation", "b", "", {{"label", "m1"}, {"evaluation", encode(eval("b", {true, false, false}))}}});
  const auto r = emit_report(run, ReportKind::kDrfr);
  EXPECT_EQ(r.tsv, "label\titems\tyes\tquestions\tDRFR\tmean_PR\nm1\t2\t2\t4\t0.5000\t0.6667\n");
}

TEST(ReportTest, AgreementSkipsUnlabelledPairs) {
  RunRecord run;
  run.artifacts.push_back({"preference", "a", "", {{"protocol", "tick"}, {"prediction", "win"}, {"human", "win"}}});
  run.artifacts.push_back({"preference", "b", "", {{"protocol", "tick"}, {"prediction", "loss"}, {"human", "win"}}});
  run.artifacts.push_back({"preference", "c", "", {{"protocol", "tick"}, {"prediction", "tie"}}});
  const auto r = emit_report(run, ReportKind::kAgreement);
  EXPECT_EQ(r.tsv, "protocol\tn\tPLD-0\tPLD-1\tPLD-2\tWPLD\ntick\t2\t0.5000\t0.0000\t0.5000\t1.0000\n");
}

TEST(ReportTest, SimilarityMeansAndCountMae) {
  RunRecord run;
  for (auto [h, r] : {std::pair{4, 5}, std::pair{6, 5}}) {
    run.artifacts.push_back({"similarity", "x", "",
                             {{"label", "human"}, {"bleu", 0.5}, {"rouge1", 1.0}, {"rouge2", 0.25}, {"rougeL", 0.75},
                              {"count_hypothesis", h}, {"count_reference", r}}});
  }
  EXPECT_EQ(emit_report(run, ReportKind::kSimilarity).tsv,
            "label\tn\tBLEU\tROUGE-1\tROUGE-2\tROUGE-L\tcount_MAE\nhuman\t2\t0.5000\t1.0000\t0.2500\t0.7500\t1.0000\n");
}

RefinementTrace trace(const std::string& id, std::vector<std::vector<bool>> its, StopReason reason) {
  RefinementTrace t;
  t.instruction_id = id;
  t.checklist = std::make_shared<const Checklist>(id, std::vector<std::string>{"A?", "B?"}, Provenance::human());
  for (std::size_t i = 0; i < its.size(); ++i) {
    RefinementIteration it;
    it.response = "r" + std::to_string(i);
    it.evaluation = eval(id, its[i]);
    if (i + 1 < its.size()) it.feedback = "f";
    t.iterations.push_back(std::move(it));
  }
  t.stop_reason = reason;
  return t;
}

TEST(ReportTest, RefinementCarriesFinishedItemsForward) {
  RunRecord run;
  run.artifacts.push_back(
      {"trace", "a", "", encode(trace("a", {{true, false}, {true, true}}, StopReason::kAllPassed))});
  run.artifacts.push_back(
      {"trace", "b", "", encode(trace("b", {{false, false}, {false, false}, {true, false}}, StopReason::kMaxIters))});
  const auto r = emit_report(run, ReportKind::kRefinement);
  EXPECT_EQ(r.tsv,
            "iteration\titems\tactive\tyes\tquestions\tDRFR\n"
            "0\t2\t2\t1\t4\t0.2500\n"
            "1\t2\t2\t2\t4\t0.5000\n"
            "2\t2\t1\t3\t4\t0.7500\n");
  EXPECT_NE(r.summary.find("all_passed=1"), std::string::npos) << r.summary;
}

TEST(ReportTest, BestOfNWithAndWithoutTruth) {
  CandidateSet set;
  set.instruction_id = "p";
  set.selecting_scorer = "stick";
  set.candidates = {{"a", {{"stick", Rational(1, 2)}}}, {"b", {{"stick", Rational(1)}}}, {"c", {{"stick", Rational(1)}}}};
  set.selected = {1, 2};
  RunRecord run;
  run.artifacts.push_back({"candidate_set", "p", "", {{"set", encode(set)}, {"true_scores", {2.0, 3.0, 1.0}}}});
  run.artifacts.push_back({"candidate_set", "q", "", {{"set", encode(set)}}});
  const auto r = emit_report(run, ReportKind::kBestOfN);
  EXPECT_EQ(r.tsv,
            "instruction\tcandidates\tselected\tselected_score\tprecision\ttrue_score\n"
            "p\t3\t1,2\t1.0000\t0.5000\t2.0000\n"
            "p\t3\t1,2\t1.0000\tNA\tNA\n");
}

TEST(ReportTest, CategoricalJoinsLabelsWithEvaluations) {
  const Checklist c("a", std::vector<ChecklistQuestion>{{0, "Short?", {"Length"}}, {1, "Kind?", {"Tone", "Length"}}},
                    Provenance::generated("m"));
  RunRecord run;
  run.artifacts.push_back({"checklist", "a", "", encode(c)});
  run.artifacts.push_back({"evaluation", "a", "", {{"label", "m1"}, {"evaluation", encode(eval("a", {true, false}))}}});
  EXPECT_EQ(emit_report(run, ReportKind::kCategorical).tsv,
            "category\tanswers\tpass_rate\nLength\t2\t0.5000\nTone\t1\t0.0000\n");
}

TEST(ReportTest, MissingArtifactsAndKinds) {
  const RunRecord empty;
  for (auto kind : {ReportKind::kDrfr, ReportKind::kAgreement, ReportKind::kSimilarity, ReportKind::kRefinement,
                    ReportKind::kBestOfN, ReportKind::kCategorical}) {
    EXPECT_EQ(error_code([&] { emit_report(empty, kind); }), ErrorCode::kMissingArtifacts) << to_string(kind);
    EXPECT_EQ(parse_report_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_report_kind("histogram"), Error);
}

TEST(ReportTest, WrittenFilesAreByteStable) {
  TempDir dir;
  RunRecord run;
  run.artifacts.push_back({"evaluation", "a", "", {{"label", "m1"}, {"evaluation", encode(eval("a", {true, false}))}}});
  RunStore store(dir / "runs");
  const auto id = store.persist(run);
  write_report(emit_report(store.load(id), ReportKind::kDrfr), dir / "one");
  write_report(emit_report(store.load(id), ReportKind::kDrfr), dir / "two");
  EXPECT_EQ(slurp(dir / "one" / "drfr.tsv"), slurp(dir / "two" / "drfr.tsv"));
  EXPECT_EQ(slurp(dir / "one" / "drfr.txt"), slurp(dir / "two" / "drfr.txt"));
}

}  // namespace
}  // namespace tick
