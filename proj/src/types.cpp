#include "tick/types.hpp"

#include <algorithm>
#include <cctype>

#include "tick/text_util.hpp"

namespace tick {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownModel: return "unknown-model";
    case ErrorCode::kProviderUnreachable: return "provider-unreachable";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kNoMatch: return "no-match";
    case ErrorCode::kMissingSlot: return "missing-slot";
    case ErrorCode::kUnknownTemplate: return "unknown-template";
    case ErrorCode::kNotFewShot: return "not-few-shot";
    case ErrorCode::kMissingAnswerMarker: return "missing-answer-marker";
    case ErrorCode::kAmbiguousAnswerMarker: return "ambiguous-answer-marker";
    case ErrorCode::kEmptyAnswerBlock: return "empty-answer-block";
    case ErrorCode::kGenerationUnparseable: return "generation-unparseable";
    case ErrorCode::kScoreUnparseable: return "score-unparseable";
    case ErrorCode::kPreferenceUnparseable: return "preference-unparseable";
    case ErrorCode::kRefinementUnparseable: return "refined-response-unparseable";
    case ErrorCode::kScorerFailed: return "scorer-failed";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kConstantSeries: return "constant-series";
    case ErrorCode::kEvenLength: return "even-length";
    case ErrorCode::kUnknownQuestionRef: return "unknown-question-ref";
    case ErrorCode::kEmptySelection: return "empty-selection";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kInvariantViolation: return "invariant-violation";
    case ErrorCode::kUnknownRunId: return "unknown-run-id";
    case ErrorCode::kWriteFailure: return "write-failure";
    case ErrorCode::kMissingArtifacts: return "missing-artifacts";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
  }
  return "unknown-error";
}

Rational Rational::parse(const std::string& text) {
  try {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(text));
    return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kParseError, "not a rational: '" + text + "'");
  }
}

void Instruction::validate() const {
  if (id.empty()) throw Error(ErrorCode::kInvariantViolation, "instruction id is empty");
  if (text.empty()) throw Error(ErrorCode::kInvariantViolation, "instruction '" + id + "' has empty text");
}

Checklist::Checklist(std::string instruction_id, std::vector<ChecklistQuestion> questions, Provenance provenance)
    : instruction_id_(std::move(instruction_id)), questions_(std::move(questions)), provenance_(std::move(provenance)) {
  if (questions_.empty()) throw Error(ErrorCode::kInvariantViolation, "checklist has no questions");
  if (provenance_.kind == Provenance::Kind::kGenerated &&
      (questions_.size() < kMinGeneratedQuestions || questions_.size() > kMaxGeneratedQuestions)) {
    throw Error(ErrorCode::kInvariantViolation,
                "generated checklist must have 2..8 questions, got " + std::to_string(questions_.size()));
  }
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    auto& q = questions_[i];
    q.index = i;
    if (q.text.empty() || q.text.back() != '?') {
      throw Error(ErrorCode::kInvariantViolation, "checklist question is not a question: '" + q.text + "'");
    }
  }
}

namespace {
std::vector<ChecklistQuestion> to_questions(const std::vector<std::string>& texts) {
  std::vector<ChecklistQuestion> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({i, texts[i], {}});
  return out;
}
}  // namespace

Checklist::Checklist(std::string instruction_id, const std::vector<std::string>& questions, Provenance provenance)
    : Checklist(std::move(instruction_id), to_questions(questions), std::move(provenance)) {}

std::vector<std::string> Checklist::texts() const {
  std::vector<std::string> out;
  out.reserve(questions_.size());
  for (const auto& q : questions_) out.push_back(q.text);
  return out;
}

std::string_view to_string(BinaryAnswer a) { return a == BinaryAnswer::kYes ? "YES" : "NO"; }

BinaryAnswer parse_binary_answer(std::string_view text) {
  const std::string lower = to_lower(text);
  if (lower == "yes" || lower == "y" || lower == "1") return BinaryAnswer::kYes;
  if (lower == "no" || lower == "n" || lower == "0") return BinaryAnswer::kNo;
  throw Error(ErrorCode::kParseError, "not a binary answer: '" + std::string(text) + "'");
}

AnswerRecord::AnswerRecord(std::size_t question_index, std::vector<BinaryAnswer> votes,
                           std::vector<std::string> rationales, std::vector<bool> parse_failures)
    : question_index_(question_index),
      votes_(std::move(votes)),
      rationales_(std::move(rationales)),
      parse_failures_(std::move(parse_failures)) {
  if (votes_.empty() || votes_.size() % 2 == 0) {
    throw Error(ErrorCode::kInvariantViolation, "vote count must be odd, got " + std::to_string(votes_.size()));
  }
  if (parse_failures_.empty()) parse_failures_.assign(votes_.size(), false);
  if (parse_failures_.size() != votes_.size()) {
    throw Error(ErrorCode::kInvariantViolation, "parse-failure flags not aligned with votes");
  }
  const auto yes = std::count(votes_.begin(), votes_.end(), BinaryAnswer::kYes);
  answer_ = 2 * static_cast<std::size_t>(yes) > votes_.size() ? BinaryAnswer::kYes : BinaryAnswer::kNo;
}

bool AnswerRecord::any_parse_failure() const noexcept {
  return std::find(parse_failures_.begin(), parse_failures_.end(), true) != parse_failures_.end();
}

ChecklistEvaluation::ChecklistEvaluation(const Checklist& checklist, std::string response_id,
                                         std::vector<AnswerRecord> records)
    : instruction_id_(checklist.instruction_id()), response_id_(std::move(response_id)), records_(std::move(records)) {
  init(checklist.size());
}

ChecklistEvaluation::ChecklistEvaluation(std::string instruction_id, std::string response_id,
                                         std::vector<AnswerRecord> records, std::size_t checklist_length)
    : instruction_id_(std::move(instruction_id)), response_id_(std::move(response_id)), records_(std::move(records)) {
  init(checklist_length);
}

void ChecklistEvaluation::init(std::size_t checklist_length) {
  if (checklist_length == 0 || records_.size() != checklist_length) {
    throw Error(ErrorCode::kInvariantViolation, "evaluation has " + std::to_string(records_.size()) +
                                                    " records for a checklist of length " +
                                                    std::to_string(checklist_length));
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].question_index() != i) {
      throw Error(ErrorCode::kInvariantViolation, "answer records out of question order");
    }
    passes_ += numeric(records_[i].answer());
  }
  pass_rate_ = Rational(passes_, static_cast<std::int64_t>(records_.size()));
}

std::string_view to_string(PreferenceLabel p) {
  switch (p) {
    case PreferenceLabel::kWin: return "win";
    case PreferenceLabel::kTie: return "tie";
    case PreferenceLabel::kLoss: return "loss";
  }
  return "?";
}

PreferenceLabel parse_preference_label(std::string_view text) {
  const std::string lower = to_lower(text);
  if (lower == "win") return PreferenceLabel::kWin;
  if (lower == "tie") return PreferenceLabel::kTie;
  if (lower == "loss") return PreferenceLabel::kLoss;
  throw Error(ErrorCode::kParseError, "not a preference label: '" + std::string(text) + "'");
}

std::string_view to_string(ScoringProtocol p) {
  return p == ScoringProtocol::kDirectScore ? "direct-score" : "check-then-score";
}

ScoringProtocol parse_scoring_protocol(std::string_view text) {
  if (text == "direct-score") return ScoringProtocol::kDirectScore;
  if (text == "check-then-score") return ScoringProtocol::kCheckThenScore;
  throw Error(ErrorCode::kParseError, "unknown protocol '" + std::string(text) + "'");
}

std::string_view to_string(EaseFeedback e) {
  switch (e) {
    case EaseFeedback::kEasier: return "easier";
    case EaseFeedback::kHarder: return "harder";
    case EaseFeedback::kNoEffect: return "no-effect";
  }
  return "?";
}

EaseFeedback parse_ease_feedback(std::string_view text) {
  if (text == "easier") return EaseFeedback::kEasier;
  if (text == "harder") return EaseFeedback::kHarder;
  if (text == "no-effect") return EaseFeedback::kNoEffect;
  throw Error(ErrorCode::kParseError, "unknown ease feedback '" + std::string(text) + "'");
}

void AnnotationRecord::validate() const {
  if (item_id.empty()) throw Error(ErrorCode::kInvariantViolation, "annotation without item_id");
  if (annotator_id.empty()) throw Error(ErrorCode::kInvariantViolation, "annotation without annotator_id");
  if (score < 1 || score > 5) {
    throw Error(ErrorCode::kInvariantViolation, "score must be in 1..5, got " + std::to_string(score));
  }
  const bool needs_answers = protocol == ScoringProtocol::kCheckThenScore;
  if (needs_answers != checklist_answers.has_value()) {
    throw Error(ErrorCode::kInvariantViolation,
                needs_answers ? "check-then-score annotation without checklist answers"
                              : "direct-score annotation must not carry checklist answers");
  }
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kAllPassed: return "all_passed";
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kParseFailure: return "parse_failure";
  }
  return "?";
}

StopReason parse_stop_reason(std::string_view text) {
  if (text == "all_passed") return StopReason::kAllPassed;
  if (text == "max_iters") return StopReason::kMaxIters;
  if (text == "parse_failure") return StopReason::kParseFailure;
  throw Error(ErrorCode::kParseError, "unknown stop reason '" + std::string(text) + "'");
}

void RefinementTrace::validate() const {
  if (iterations.empty()) throw Error(ErrorCode::kInvariantViolation, "refinement trace has no iterations");
  for (std::size_t t = 0; t < iterations.size(); ++t) {
    const auto& it = iterations[t];
    if (it.evaluation && checklist && it.evaluation->size() != checklist->size()) {
      throw Error(ErrorCode::kInvariantViolation, "iteration judged against a different checklist");
    }
    // Only checklist-driven loops stop on a full pass.
    if (t + 1 < iterations.size() && it.evaluation && !it.critique && it.evaluation->all_passed()) {
      throw Error(ErrorCode::kInvariantViolation,
                  "iteration " + std::to_string(t + 1) + " follows a fully passing iteration");
    }
  }
  const auto& last = iterations.back();
  if (stop_reason == StopReason::kAllPassed && !(last.evaluation && last.evaluation->all_passed())) {
    throw Error(ErrorCode::kInvariantViolation, "stop reason all_passed but final evaluation has a NO");
  }
}

std::size_t RefinementTrace::best_index() const {
  std::size_t best = iterations.empty() ? 0 : iterations.size() - 1;
  std::optional<Rational> best_rate;
  for (std::size_t t = 0; t < iterations.size(); ++t) {
    if (!iterations[t].evaluation) continue;
    const auto& rate = iterations[t].evaluation->pass_rate();
    if (!best_rate || rate > *best_rate) {
      best_rate = rate;
      best = t;
    }
  }
  return best;
}

bool operator==(const RefinementTrace& a, const RefinementTrace& b) {
  const bool same_checklist =
      (a.checklist == nullptr && b.checklist == nullptr) ||
      (a.checklist != nullptr && b.checklist != nullptr && *a.checklist == *b.checklist);
  return same_checklist && a.instruction_id == b.instruction_id && a.iterations == b.iterations &&
         a.stop_reason == b.stop_reason;
}

double to_double(const ScoreValue& v) {
  return std::visit([](const auto& x) -> double {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Rational>) {
      return x.to_double();
    } else {
      return x;
    }
  }, v);
}

std::strong_ordering compare(const ScoreValue& a, const ScoreValue& b) {
  if (std::holds_alternative<Rational>(a) && std::holds_alternative<Rational>(b)) {
    return std::get<Rational>(a) <=> std::get<Rational>(b);
  }
  const double x = to_double(a);
  const double y = to_double(b);
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::vector<std::size_t> argmax_set(const std::vector<std::optional<ScoreValue>>& scores) {
  std::vector<std::size_t> best;
  const ScoreValue* top = nullptr;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i]) continue;
    if (top == nullptr || compare(*scores[i], *top) > 0) {
      top = &*scores[i];
      best.assign(1, i);
    } else if (compare(*scores[i], *top) == 0) {
      best.push_back(i);
    }
  }
  return best;
}

void CandidateSet::validate() const {
  std::vector<std::optional<ScoreValue>> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    auto it = c.scores.find(selecting_scorer);
    scores.push_back(it == c.scores.end() ? std::nullopt : std::optional<ScoreValue>(it->second));
  }
  if (argmax_set(scores) != selected) {
    throw Error(ErrorCode::kInvariantViolation, "selected set is not the argmax tie set of '" + selecting_scorer + "'");
  }
}

}  // namespace tick
