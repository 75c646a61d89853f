#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tick/checklist_gen.hpp"
#include "tick/evaluator.hpp"
#include "tick/gateway.hpp"
#include "tick/prompts.hpp"
#include "tick/types.hpp"

namespace tick {

struct FeedbackBlock {
  enum class Kind { kChecklist, kUnstructured };
  Kind kind = Kind::kChecklist;
  std::string body;

  /// Lists every question with its yes/no answer, in checklist order.
  static FeedbackBlock from_evaluation(const Checklist& checklist, const ChecklistEvaluation& evaluation);
  static FeedbackBlock from_critique(std::string critique) { return {Kind::kUnstructured, std::move(critique)}; }
};

struct ResponseOptions {
  /// nullopt = provider default.
  std::optional<double> temperature;
  int max_tokens = 2048;
};

/// Scores a response with something other than the generating model.
using ExternalScorer = std::function<double(const Instruction&, const std::string& response)>;

enum class ScorerKind { kStick, kDirectSelfScore, kExternal };
std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view text);

struct BestOfNOptions {
  /// Temperature stays at the provider default unless set; an explicit value must be > 0.
  ResponseOptions sampling;
  /// Judge settings for the stick and direct scorers (judge = generating model
  /// for self-selection).
  EvalConfig eval;
  ExternalScorer external;
  /// Reused when set, otherwise generated once from eval.judge_model_id.
  std::shared_ptr<const Checklist> checklist;
  GenerationOptions checklist_generation;
};

class SelfImprover {
 public:
  SelfImprover(Gateway& gateway, const TemplateCatalog& catalog) : gateway_(gateway), catalog_(catalog) {}

  /// Initial response, one checklist (generated once unless supplied), then up
  /// to `max_iters` refinements driven by the checklist answers. Stops early
  /// when every question passes. `max_iters` counts refinements, so a trace
  /// holds at most max_iters + 1 responses.
  RefinementTrace stick_refine(const Instruction& instruction, const std::string& model_id, const EvalConfig& cfg,
                               int max_iters, std::shared_ptr<const Checklist> checklist = nullptr,
                               const ResponseOptions& options = {}) const;

  /// Same loop with free-text self-critique as feedback and no pass-based stop.
  /// When `scorer` and `checklist` are given every iteration is also scored
  /// (for reporting only; the scores never reach the prompts).
  RefinementTrace vanilla_self_refine(const Instruction& instruction, const std::string& model_id, int max_iters,
                                      const Evaluator* scorer = nullptr,
                                      std::shared_ptr<const Checklist> checklist = nullptr,
                                      const ResponseOptions& options = {}) const;

  /// n samples with sample tags 0..n-1, scored, selected = full argmax tie set.
  CandidateSet best_of_n(const Instruction& instruction, const std::string& model_id, int n, ScorerKind scorer,
                         const BestOfNOptions& options) const;

  std::string generate_response(const Instruction& instruction, const std::string& model_id, std::uint32_t tag,
                                const ResponseOptions& options) const;

 private:
  /// Refine prompt -> parsed response, one re-sample; nullopt on failure.
  std::optional<std::string> refine(const std::string& prompt, const std::string& model_id,
                                    const ResponseOptions& options) const;

  Gateway& gateway_;
  const TemplateCatalog& catalog_;
};

/// |selected ∩ best| / |selected| where best is the argmax tie set of
/// true_scores. Unselected members of the best set are not penalised.
double selection_precision(const std::vector<std::size_t>& selected, std::span<const double> true_scores);

double average_selected_score(const std::vector<std::size_t>& selected, std::span<const double> true_scores);

}  // namespace tick
