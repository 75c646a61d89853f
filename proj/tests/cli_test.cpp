#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "tick/cli.hpp"
#include "tick/harness_io.hpp"

namespace tick {
namespace {

using testing::Script;
using testing::TempDir;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tick");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

class CliTest : public ::testing::Test {
 protected:
  void configure(const Script& script) {
    dir_.write("script.json", script.json().dump());
    config_ = dir_.write("config.json", R"({"scripted": {"judge": "script.json"}, "runs_dir": "runs",
                                            "initial_backoff_ms": 1})")
                  .string();
  }
  std::vector<std::string> base(const std::string& command, const std::string& dataset) {
    return {command, "--config", config_, "--dataset", (dir_ / dataset).string(), "--judge", "judge"};
  }
  RunRecord load(const std::string& id) { return RunStore(dir_ / "runs").load(id); }

  TempDir dir_;
  std::string config_;
};

TEST_F(CliTest, PreferRecordsPredictionsAndHumanLabels) {
  Script s;
  s.verdict("alpha reply", "Is it short?", true).verdict("alpha reply", "Is it kind?", true);
  s.verdict("beta reply", "Is it short?", true).verdict("beta reply", "Is it kind?", false);
  s.on({"**Generated Text**\nalpha reply\n"}, {"Analysis: ok\nAnswer: 3"});
  s.on({"**Generated Text**\nbeta reply\n"}, {"Analysis: ok\nAnswer: 3"});
  configure(s);
  dir_.write("data.jsonl",
             R"({"schema":1,"instruction":{"id":"p1","text":"Reply."},"responses":{"alpha":"alpha reply","beta":"beta reply"},)"
             R"("checklist":["Is it short?","Is it kind?"],"human_preferences":[1,2,2]})"
             "\n");
  auto args = base("prefer", "data.jsonl");
  args.insert(args.end(), {"--protocol", "tick", "--protocol", "direct-score"});
  const auto r = cli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto run = load(trimmed(r.out));
  const auto prefs = run.of_kind("preference");
  ASSERT_EQ(prefs.size(), 2u);
  EXPECT_EQ(prefs[0]->payload.at("protocol"), "tick");
  EXPECT_EQ(prefs[0]->payload.at("prediction"), "win");
  EXPECT_EQ(prefs[0]->payload.at("human"), "win");
  EXPECT_EQ(prefs[1]->payload.at("prediction"), "tie");
  EXPECT_EQ(prefs[1]->payload.at("scores"), (nlohmann::json{3, 3}));
  EXPECT_FALSE(prefs[0]->prompt_hash.empty());
  EXPECT_EQ(run.ledger.at("total").at("requests"), 6);

  const auto report = cli({"report", "--config", config_, "--run", run.run_id, "--kind", "agreement"});
  ASSERT_EQ(report.code, kExitOk) << report.err;
  EXPECT_EQ(slurp(dir_ / "runs" / run.run_id / "reports" / "agreement.tsv"),
            "protocol\tn\tPLD-0\tPLD-1\tPLD-2\tWPLD\ndirect-score\t1\t0.0000\t1.0000\t0.0000\t1.0000\n"
            "tick\t1\t1.0000\t0.0000\t0.0000\t0.0000\n");
}

TEST_F(CliTest, RefineReportIsByteStable) {
  const auto cases = testing::refine_cases(4);
  configure(testing::refine_script(cases));
  std::vector<DatasetRecord> records;
  for (const auto& c : cases) records.push_back({c.instruction, {}, std::nullopt, std::nullopt, std::nullopt});
  write_dataset(dir_ / "refine.jsonl", records);

  std::vector<std::string> tsvs;
  for (int run = 0; run < 2; ++run) {
    const auto r = cli(base("refine", "refine.jsonl"));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto id = trimmed(r.out);
    EXPECT_EQ(load(id).of_kind("trace").size(), cases.size());
    ASSERT_EQ(cli({"report", "--config", config_, "--run", id, "--kind", "refinement"}).code, kExitOk);
    tsvs.push_back(slurp(dir_ / "runs" / id / "reports" / "refinement.tsv"));
  }
  EXPECT_EQ(tsvs[0], tsvs[1]);
  EXPECT_NE(tsvs[0].find("iteration\titems"), std::string::npos);
}

TEST_F(CliTest, GenChecklistStoresOneChecklistPerInstruction) {
  configure(Script{}.checklist("Write a limerick.", {"Is it five lines?", "Does it rhyme?"}));
  dir_.write("data.jsonl", R"({"schema":1,"instruction":{"id":"l1","text":"Write a limerick."}})" "\n");
  const auto r = cli(base("gen-checklist", "data.jsonl"));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto run = load(trimmed(r.out));
  ASSERT_EQ(run.of_kind("checklist").size(), 1u);
  EXPECT_EQ(run.of_kind("checklist")[0]->payload.at("questions").size(), 2u);
}

TEST_F(CliTest, ExitCodes) {
  configure(Script{});
  dir_.write("data.jsonl", R"({"schema":1,"instruction":{"id":"l1","text":"x"}})" "\n");
  EXPECT_EQ(cli({}).code, kExitUsageError);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsageError);
  EXPECT_EQ(cli({"evaluate", "--dataset", (dir_ / "data.jsonl").string()}).code, kExitUsageError);
  EXPECT_EQ(cli({"evaluate", "--dataset", (dir_ / "missing.jsonl").string(), "--judge", "judge"}).code,
            kExitUsageError);
  EXPECT_EQ(cli({"report", "--run", "x", "--kind", "histogram"}).code, kExitUsageError);

  auto args = base("evaluate", "data.jsonl");
  args.back() = "nobody";
  const auto unknown = cli(args);
  EXPECT_EQ(unknown.code, kExitPipelineError);
  EXPECT_NE(unknown.err.find("unknown-model"), std::string::npos) << unknown.err;

  dir_.write("bad.jsonl", R"({"schema":1,"instruction":{"id":"l1","text":"x"}})" "\n{broken\n");
  const auto bad = cli(base("evaluate", "bad.jsonl"));
  EXPECT_EQ(bad.code, kExitPipelineError);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;

  const auto missing = cli({"report", "--config", config_, "--run", "run-nope", "--kind", "drfr"});
  EXPECT_EQ(missing.code, kExitPipelineError);
}

}  // namespace
}  // namespace tick
