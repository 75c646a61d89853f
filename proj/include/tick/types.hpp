#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tick/rational.hpp"

namespace tick {

struct Instruction {
  std::string id;
  std::string text;  ///< may embed reference passages
  std::string source;
  std::set<std::string> categories;

  /// Throws kInvariantViolation on empty id or text.
  void validate() const;
  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct ChecklistQuestion {
  std::size_t index = 0;
  std::string text;
  std::set<std::string> categories;

  friend bool operator==(const ChecklistQuestion&, const ChecklistQuestion&) = default;
};

struct Provenance {
  enum class Kind { kGenerated, kHuman, kFile };
  Kind kind = Kind::kFile;
  std::string model_id;  ///< only meaningful for kGenerated

  static Provenance generated(std::string model) { return {Kind::kGenerated, std::move(model)}; }
  static Provenance human() { return {Kind::kHuman, {}}; }
  static Provenance file() { return {Kind::kFile, {}}; }
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

inline constexpr std::size_t kMinGeneratedQuestions = 2;
inline constexpr std::size_t kMaxGeneratedQuestions = 8;

/// Ordered YES/NO questions for one instruction. A YES answer means the
/// requirement is met, so every question must be phrased as a question.
class Checklist {
 public:
  Checklist(std::string instruction_id, std::vector<ChecklistQuestion> questions, Provenance provenance);
  Checklist(std::string instruction_id, const std::vector<std::string>& questions, Provenance provenance);

  const std::string& instruction_id() const noexcept { return instruction_id_; }
  const std::vector<ChecklistQuestion>& questions() const noexcept { return questions_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return questions_.size(); }
  const ChecklistQuestion& operator[](std::size_t i) const { return questions_.at(i); }
  std::vector<std::string> texts() const;

  friend bool operator==(const Checklist&, const Checklist&) = default;

 private:
  std::string instruction_id_;
  std::vector<ChecklistQuestion> questions_;
  Provenance provenance_;
};

enum class BinaryAnswer : int { kNo = 0, kYes = 1 };

constexpr int numeric(BinaryAnswer a) noexcept { return static_cast<int>(a); }
std::string_view to_string(BinaryAnswer a);
BinaryAnswer parse_binary_answer(std::string_view text);

/// Answer to one checklist question aggregated from k sampled judgements.
class AnswerRecord {
 public:
  /// `parse_failures[i]` marks votes that defaulted to NO because the judge
  /// output could not be parsed. k = votes.size() must be odd.
  AnswerRecord(std::size_t question_index, std::vector<BinaryAnswer> votes, std::vector<std::string> rationales,
               std::vector<bool> parse_failures = {});

  std::size_t question_index() const noexcept { return question_index_; }
  BinaryAnswer answer() const noexcept { return answer_; }
  const std::vector<BinaryAnswer>& votes() const noexcept { return votes_; }
  const std::vector<std::string>& rationales() const noexcept { return rationales_; }
  const std::vector<bool>& parse_failures() const noexcept { return parse_failures_; }
  std::size_t k() const noexcept { return votes_.size(); }
  bool any_parse_failure() const noexcept;

  friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;

 private:
  std::size_t question_index_;
  std::vector<BinaryAnswer> votes_;
  std::vector<std::string> rationales_;
  std::vector<bool> parse_failures_;
  BinaryAnswer answer_;
};

class ChecklistEvaluation {
 public:
  ChecklistEvaluation(const Checklist& checklist, std::string response_id, std::vector<AnswerRecord> records);
  /// For decoding, where only the checklist length is known.
  ChecklistEvaluation(std::string instruction_id, std::string response_id, std::vector<AnswerRecord> records,
                      std::size_t checklist_length);

  const std::string& instruction_id() const noexcept { return instruction_id_; }
  const std::string& response_id() const noexcept { return response_id_; }
  const std::vector<AnswerRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::int64_t passes() const noexcept { return passes_; }
  const Rational& pass_rate() const noexcept { return pass_rate_; }
  bool all_passed() const noexcept { return passes_ == static_cast<std::int64_t>(records_.size()); }

  friend bool operator==(const ChecklistEvaluation&, const ChecklistEvaluation&) = default;

 private:
  void init(std::size_t checklist_length);

  std::string instruction_id_;
  std::string response_id_;
  std::vector<AnswerRecord> records_;
  std::int64_t passes_ = 0;
  Rational pass_rate_;
};

/// Win means the first response is preferred. The order Win > Tie > Loss is
/// used for label distance only.
enum class PreferenceLabel { kWin, kTie, kLoss };

std::string_view to_string(PreferenceLabel p);
PreferenceLabel parse_preference_label(std::string_view text);
/// Swaps Win and Loss, keeps Tie.
constexpr PreferenceLabel invert(PreferenceLabel p) noexcept {
  return p == PreferenceLabel::kWin ? PreferenceLabel::kLoss
         : p == PreferenceLabel::kLoss ? PreferenceLabel::kWin
                                        : PreferenceLabel::kTie;
}

enum class ScoringProtocol { kDirectScore, kCheckThenScore };
enum class EaseFeedback { kEasier, kHarder, kNoEffect };

std::string_view to_string(ScoringProtocol p);
ScoringProtocol parse_scoring_protocol(std::string_view text);
std::string_view to_string(EaseFeedback e);
EaseFeedback parse_ease_feedback(std::string_view text);

struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  std::optional<std::vector<BinaryAnswer>> checklist_answers;
  int score = 0;
  ScoringProtocol protocol = ScoringProtocol::kDirectScore;
  std::optional<EaseFeedback> ease_feedback;

  void validate() const;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

enum class StopReason { kAllPassed, kMaxIters, kParseFailure };
std::string_view to_string(StopReason r);
StopReason parse_stop_reason(std::string_view text);

struct RefinementIteration {
  std::string response;
  std::string prompt;  ///< prompt that produced `response`
  std::optional<ChecklistEvaluation> evaluation;
  std::optional<std::string> critique;
  std::string feedback;  ///< feedback rendered from this iteration, empty when the loop stopped here

  friend bool operator==(const RefinementIteration&, const RefinementIteration&) = default;
};

struct RefinementTrace {
  std::string instruction_id;
  /// Shared by every iteration; null only for unscored vanilla runs.
  std::shared_ptr<const Checklist> checklist;
  std::vector<RefinementIteration> iterations;
  StopReason stop_reason = StopReason::kMaxIters;

  void validate() const;
  /// Index of the highest pass-rate iteration (earliest on ties); last iteration
  /// when no evaluations are present.
  std::size_t best_index() const;

  friend bool operator==(const RefinementTrace& a, const RefinementTrace& b);
};

/// A scorer's value for one candidate: exact for checklist/direct scores,
/// real-valued for external plug-in scorers.
using ScoreValue = std::variant<Rational, double>;
double to_double(const ScoreValue& v);
/// Exact when both sides are rational.
std::strong_ordering compare(const ScoreValue& a, const ScoreValue& b);

struct Candidate {
  std::string text;
  std::map<std::string, ScoreValue> scores;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateSet {
  std::string instruction_id;
  std::vector<Candidate> candidates;
  std::string selecting_scorer;
  std::vector<std::size_t> selected;

  /// selected must equal the argmax tie set of the selecting scorer.
  void validate() const;
  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

/// Indices attaining the maximum, all ties kept, ascending. Candidates without a
/// score (nullopt) are never selected.
std::vector<std::size_t> argmax_set(const std::vector<std::optional<ScoreValue>>& scores);

}  // namespace tick
