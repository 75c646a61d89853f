#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tick/gateway.hpp"
#include "tick/prompts.hpp"
#include "tick/types.hpp"

namespace tick {

struct EvalConfig {
  std::string judge_model_id;
  bool use_cot = true;
  /// maj@k sample count; odd, and 1 when use_cot is false.
  int k = 1;
  double temperature_judging = 0.0;
  /// Concurrent judge calls issued while answering one checklist.
  std::size_t max_in_flight = 4;
  int max_tokens = 1024;

  void validate() const;
};

/// Runs the judge protocols against one judge model: per-question checklist
/// answering (TICK), direct 1-5 scoring, direct pairwise preference and
/// check-then-score.
class Evaluator {
 public:
  Evaluator(Gateway& gateway, const TemplateCatalog& catalog, EvalConfig config);

  const EvalConfig& config() const noexcept { return config_; }

  /// Prompt for one question; contains that question and no other.
  std::string question_prompt(const Instruction& instruction, std::string_view response,
                              const ChecklistQuestion& question) const;
  std::string direct_score_prompt(const Instruction& instruction, std::string_view response) const;
  std::string preference_prompt(const Instruction& instruction, std::string_view response_a,
                                std::string_view response_b) const;
  std::string check_then_score_prompt(const Instruction& instruction, std::string_view response,
                                      const Checklist& checklist) const;

  /// k samples with distinct tags, majority vote. A sample that stays
  /// unparseable after one re-sample counts as NO and is flagged.
  AnswerRecord answer_question(const Instruction& instruction, std::string_view response,
                               const ChecklistQuestion& question) const;

  /// Every question in its own prompt, answered concurrently; records are
  /// returned in question order.
  ChecklistEvaluation evaluate_checklist(const Instruction& instruction, std::string_view response,
                                         const Checklist& checklist, std::string response_id = "response") const;

  /// Throws kScoreUnparseable after one failed re-sample.
  int direct_score(const Instruction& instruction, std::string_view response) const;
  /// Answer 1/2/3 maps to Win/Tie/Loss. Throws kPreferenceUnparseable.
  PreferenceLabel judge_preference_direct(const Instruction& instruction, std::string_view response_a,
                                          std::string_view response_b) const;
  /// Checklist shown to the judge, single holistic score, questions not answered.
  int check_then_score(const Instruction& instruction, std::string_view response, const Checklist& checklist) const;
  /// Both responses judged against the same checklist; higher pass rate wins.
  PreferenceLabel tick_preference(const Instruction& instruction, std::string_view response_a,
                                  std::string_view response_b, const Checklist& checklist) const;

 private:
  std::string finish_prompt(std::string prompt) const;
  CompletionRequest judge_request(std::string prompt, std::uint32_t tag) const;
  std::vector<AnswerRecord> answer_all(const std::vector<std::string>& prompts) const;
  int single_score(const std::string& prompt, int lo, int hi, ErrorCode on_failure) const;

  Gateway& gateway_;
  const TemplateCatalog& catalog_;
  EvalConfig config_;
};

/// Win iff a > b, Loss iff a < b, Tie on exact equality.
PreferenceLabel compare_pass_rates(const Rational& a, const Rational& b);

/// Total YES answers over total questions (not the mean of pass rates).
Rational drfr(std::span<const ChecklistEvaluation> evaluations);

/// Fraction of positions where the aggregated answer equals gold.
double question_level_accuracy(std::span<const AnswerRecord> predicted, std::span<const BinaryAnswer> gold);

}  // namespace tick
