#include "tick/evaluator.hpp"

#include <optional>

#include <spdlog/spdlog.h>

#include "tick/parsing.hpp"

namespace tick {

void EvalConfig::validate() const {
  if (judge_model_id.empty()) throw Error(ErrorCode::kInvalidArgument, "judge model not set");
  if (k < 1 || k % 2 == 0) throw Error(ErrorCode::kInvalidArgument, "k must be odd and positive, got " + std::to_string(k));
  if (!use_cot && k != 1) throw Error(ErrorCode::kInvalidArgument, "maj@k requires chain-of-thought (k must be 1)");
  if (temperature_judging < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative judging temperature");
  if (max_in_flight == 0) throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
}

Evaluator::Evaluator(Gateway& gateway, const TemplateCatalog& catalog, EvalConfig config)
    : gateway_(gateway), catalog_(catalog), config_(std::move(config)) {
  config_.validate();
}

std::string Evaluator::finish_prompt(std::string prompt) const {
  if (!config_.use_cot) {
    // Without chain-of-thought the output format asks for the answer line only.
    constexpr std::string_view kAnalysisLine = "Analysis: xxx\n";
    if (auto pos = prompt.find(kAnalysisLine); pos != std::string::npos) prompt.erase(pos, kAnalysisLine.size());
  }
  return prompt;
}

CompletionRequest Evaluator::judge_request(std::string prompt, std::uint32_t tag) const {
  CompletionRequest r;
  r.model_id = config_.judge_model_id;
  r.prompt = std::move(prompt);
  r.temperature = config_.temperature_judging;
  r.max_tokens = config_.max_tokens;
  r.sample_tag = tag;
  r.kind = CallKind::kJudge;
  return r;
}

std::string Evaluator::question_prompt(const Instruction& instruction, std::string_view response,
                                       const ChecklistQuestion& question) const {
  return finish_prompt(catalog_.render(TemplateId::kChecklistEvaluation, {{"message", instruction.text},
                                                                          {"generation", std::string(response)},
                                                                          {"question", question.text}}));
}

std::string Evaluator::direct_score_prompt(const Instruction& instruction, std::string_view response) const {
  return finish_prompt(catalog_.render(TemplateId::kDirectScoring,
                                       {{"message", instruction.text}, {"generation", std::string(response)}}));
}

std::string Evaluator::preference_prompt(const Instruction& instruction, std::string_view response_a,
                                         std::string_view response_b) const {
  return finish_prompt(catalog_.render(TemplateId::kPreference, {{"message", instruction.text},
                                                                 {"generation_1", std::string(response_a)},
                                                                 {"generation_2", std::string(response_b)}}));
}

std::string Evaluator::check_then_score_prompt(const Instruction& instruction, std::string_view response,
                                               const Checklist& checklist) const {
  std::string listing;
  for (const auto& q : checklist.questions()) {
    listing += "- " + q.text + "\n";
  }
  if (!listing.empty()) listing.pop_back();
  return finish_prompt(catalog_.render(TemplateId::kCheckThenScore, {{"message", instruction.text},
                                                                     {"generation", std::string(response)},
                                                                     {"checklist", listing}}));
}

// Answers every prompt with k votes. Round one issues all n*k samples, round
// two re-samples each unparseable vote once with tag k + vote index.
std::vector<AnswerRecord> Evaluator::answer_all(const std::vector<std::string>& prompts) const {
  const auto k = static_cast<std::size_t>(config_.k);
  const std::size_t total = prompts.size() * k;
  std::vector<std::optional<BinaryAnswer>> votes(total);
  std::vector<std::string> rationales(total);

  const auto run_round = [&](const std::vector<std::size_t>& slots, std::uint32_t tag_offset) {
    std::vector<CompletionRequest> requests;
    requests.reserve(slots.size());
    for (auto slot : slots) {
      requests.push_back(judge_request(prompts[slot / k], tag_offset + static_cast<std::uint32_t>(slot % k)));
    }
    const auto outcomes = gateway_.complete_many(requests, config_.max_in_flight);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& text = outcomes[i].value().text;  // gateway errors propagate
      votes[slots[i]] = parse_yes_no(text);
      rationales[slots[i]] = rationale_before_answer(text);
    }
  };

  std::vector<std::size_t> all(total);
  for (std::size_t i = 0; i < total; ++i) all[i] = i;
  run_round(all, 0);

  std::vector<std::size_t> failed;
  for (std::size_t i = 0; i < total; ++i) {
    if (!votes[i]) failed.push_back(i);
  }
  if (!failed.empty()) run_round(failed, static_cast<std::uint32_t>(k));

  std::vector<AnswerRecord> records;
  records.reserve(prompts.size());
  for (std::size_t q = 0; q < prompts.size(); ++q) {
    std::vector<BinaryAnswer> vs;
    std::vector<std::string> rs;
    std::vector<bool> flags;
    for (std::size_t s = 0; s < k; ++s) {
      const auto& v = votes[q * k + s];
      vs.push_back(v.value_or(BinaryAnswer::kNo));
      rs.push_back(rationales[q * k + s]);
      flags.push_back(!v.has_value());
      if (!v) spdlog::warn("unparseable judge answer for question {} sample {}; counted as NO", q, s);
    }
    records.emplace_back(q, std::move(vs), std::move(rs), std::move(flags));
  }
  return records;
}

AnswerRecord Evaluator::answer_question(const Instruction& instruction, std::string_view response,
                                        const ChecklistQuestion& question) const {
  auto records = answer_all({question_prompt(instruction, response, question)});
  const auto& r = records.front();
  return AnswerRecord(question.index, r.votes(), r.rationales(), r.parse_failures());
}

ChecklistEvaluation Evaluator::evaluate_checklist(const Instruction& instruction, std::string_view response,
                                                  const Checklist& checklist, std::string response_id) const {
  if (!checklist.instruction_id().empty() && checklist.instruction_id() != instruction.id) {
    throw Error(ErrorCode::kInvalidArgument,
                "checklist for '" + checklist.instruction_id() + "' used on '" + instruction.id + "'");
  }
  std::vector<std::string> prompts;
  prompts.reserve(checklist.size());
  for (const auto& q : checklist.questions()) prompts.push_back(question_prompt(instruction, response, q));
  return ChecklistEvaluation(checklist, std::move(response_id), answer_all(prompts));
}

int Evaluator::single_score(const std::string& prompt, int lo, int hi, ErrorCode on_failure) const {
  std::string last;
  for (std::uint32_t tag = 0; tag < 2; ++tag) {
    last = gateway_.complete(judge_request(prompt, tag)).text;
    if (auto v = parse_int_answer(last, lo, hi)) return *v;
  }
  throw Error(on_failure, "no integer in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] after re-sample; last output: " + last);
}

int Evaluator::direct_score(const Instruction& instruction, std::string_view response) const {
  return single_score(direct_score_prompt(instruction, response), 1, 5, ErrorCode::kScoreUnparseable);
}

PreferenceLabel Evaluator::judge_preference_direct(const Instruction& instruction, std::string_view response_a,
                                                   std::string_view response_b) const {
  switch (single_score(preference_prompt(instruction, response_a, response_b), 1, 3,
                       ErrorCode::kPreferenceUnparseable)) {
    case 1: return PreferenceLabel::kWin;
    case 2: return PreferenceLabel::kTie;
    default: return PreferenceLabel::kLoss;
  }
}

int Evaluator::check_then_score(const Instruction& instruction, std::string_view response,
                                const Checklist& checklist) const {
  return single_score(check_then_score_prompt(instruction, response, checklist), 1, 5, ErrorCode::kScoreUnparseable);
}

PreferenceLabel Evaluator::tick_preference(const Instruction& instruction, std::string_view response_a,
                                           std::string_view response_b, const Checklist& checklist) const {
  const auto a = evaluate_checklist(instruction, response_a, checklist, "A");
  const auto b = evaluate_checklist(instruction, response_b, checklist, "B");
  return compare_pass_rates(a.pass_rate(), b.pass_rate());
}

PreferenceLabel compare_pass_rates(const Rational& a, const Rational& b) {
  if (a > b) return PreferenceLabel::kWin;
  if (a < b) return PreferenceLabel::kLoss;
  return PreferenceLabel::kTie;
}

Rational drfr(std::span<const ChecklistEvaluation> evaluations) {
  if (evaluations.empty()) throw Error(ErrorCode::kEmptyInput, "drfr of no evaluations");
  std::int64_t passes = 0;
  std::int64_t questions = 0;
  for (const auto& e : evaluations) {
    passes += e.passes();
    questions += static_cast<std::int64_t>(e.size());
  }
  return Rational(passes, questions);
}

double question_level_accuracy(std::span<const AnswerRecord> predicted, std::span<const BinaryAnswer> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(predicted.size()) + " predictions vs " +
                                                std::to_string(gold.size()) + " gold answers");
  }
  if (predicted.empty()) throw Error(ErrorCode::kEmptyInput, "accuracy of no answers");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i].answer() == gold[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

}  // namespace tick
