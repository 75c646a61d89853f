#include "tick/improve.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "tick/parsing.hpp"

namespace tick {

FeedbackBlock FeedbackBlock::from_evaluation(const Checklist& checklist, const ChecklistEvaluation& evaluation) {
  if (evaluation.size() != checklist.size()) {
    throw Error(ErrorCode::kInvariantViolation, "evaluation does not match checklist");
  }
  std::string body;
  for (std::size_t i = 0; i < checklist.size(); ++i) {
    const bool yes = evaluation.records()[i].answer() == BinaryAnswer::kYes;
    body += "Q" + std::to_string(i + 1) + ": " + checklist[i].text + "\n";
    body += "A" + std::to_string(i + 1) + ": " + (yes ? "yes" : "no") + "\n";
  }
  if (!body.empty()) body.pop_back();
  return {Kind::kChecklist, std::move(body)};
}

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kStick: return "stick";
    case ScorerKind::kDirectSelfScore: return "direct_self_score";
    case ScorerKind::kExternal: return "external";
  }
  return "?";
}

ScorerKind parse_scorer_kind(std::string_view text) {
  if (text == "stick") return ScorerKind::kStick;
  if (text == "direct_self_score" || text == "direct") return ScorerKind::kDirectSelfScore;
  if (text == "external") return ScorerKind::kExternal;
  throw Error(ErrorCode::kInvalidArgument, "unknown scorer '" + std::string(text) + "'");
}

std::string SelfImprover::generate_response(const Instruction& instruction, const std::string& model_id,
                                            std::uint32_t tag, const ResponseOptions& options) const {
  CompletionRequest r;
  r.model_id = model_id;
  r.prompt = instruction.text;
  r.temperature = options.temperature;
  r.max_tokens = options.max_tokens;
  r.sample_tag = tag;
  r.kind = CallKind::kGeneration;
  return gateway_.complete(r).text;
}

std::optional<std::string> SelfImprover::refine(const std::string& prompt, const std::string& model_id,
                                                const ResponseOptions& options) const {
  CompletionRequest r;
  r.model_id = model_id;
  r.prompt = prompt;
  r.temperature = options.temperature;
  r.max_tokens = options.max_tokens;
  r.kind = CallKind::kRefine;
  for (std::uint32_t tag = 0; tag < 2; ++tag) {
    r.sample_tag = tag;
    if (auto parsed = parse_refined_response(gateway_.complete(r).text)) return parsed;
  }
  return std::nullopt;
}

RefinementTrace SelfImprover::stick_refine(const Instruction& instruction, const std::string& model_id,
                                           const EvalConfig& cfg, int max_iters,
                                           std::shared_ptr<const Checklist> checklist,
                                           const ResponseOptions& options) const {
  if (max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  const Evaluator evaluator(gateway_, catalog_, cfg);

  RefinementTrace trace;
  trace.instruction_id = instruction.id;
  RefinementIteration first;
  first.prompt = instruction.text;
  first.response = generate_response(instruction, model_id, 0, options);
  trace.iterations.push_back(std::move(first));

  if (!checklist) {
    checklist = std::make_shared<const Checklist>(ChecklistGenerator(gateway_, catalog_).generate(instruction, model_id));
  }
  trace.checklist = checklist;

  for (int t = 0;; ++t) {
    auto& current = trace.iterations.back();
    current.evaluation =
        evaluator.evaluate_checklist(instruction, current.response, *checklist, "iter" + std::to_string(t));
    if (current.evaluation->all_passed()) {
      trace.stop_reason = StopReason::kAllPassed;
      break;
    }
    if (t == max_iters) {
      trace.stop_reason = StopReason::kMaxIters;
      break;
    }
    current.feedback = FeedbackBlock::from_evaluation(*checklist, *current.evaluation).body;
    RefinementIteration next;
    next.prompt = catalog_.render(TemplateId::kRefineWithChecklist, {{"message", instruction.text},
                                                                     {"response", current.response},
                                                                     {"feedback", current.feedback}});
    auto refined = refine(next.prompt, model_id, options);
    if (!refined) {
      spdlog::warn("refinement of '{}' unparseable at iteration {}; keeping best so far", instruction.id, t + 1);
      trace.stop_reason = StopReason::kParseFailure;
      break;
    }
    next.response = std::move(*refined);
    trace.iterations.push_back(std::move(next));
  }
  trace.validate();
  return trace;
}

RefinementTrace SelfImprover::vanilla_self_refine(const Instruction& instruction, const std::string& model_id,
                                                  int max_iters, const Evaluator* scorer,
                                                  std::shared_ptr<const Checklist> checklist,
                                                  const ResponseOptions& options) const {
  if (max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if ((scorer == nullptr) != (checklist == nullptr)) {
    throw Error(ErrorCode::kInvalidArgument, "scoring a vanilla run needs both an evaluator and a checklist");
  }
  RefinementTrace trace;
  trace.instruction_id = instruction.id;
  trace.checklist = checklist;
  trace.stop_reason = StopReason::kMaxIters;

  RefinementIteration first;
  first.prompt = instruction.text;
  first.response = generate_response(instruction, model_id, 0, options);
  trace.iterations.push_back(std::move(first));

  for (int t = 0;; ++t) {
    auto& current = trace.iterations.back();
    if (scorer) {
      current.evaluation =
          scorer->evaluate_checklist(instruction, current.response, *checklist, "iter" + std::to_string(t));
    }
    if (t == max_iters) break;

    CompletionRequest critique_request;
    critique_request.model_id = model_id;
    critique_request.prompt = catalog_.render(TemplateId::kUnstructuredCritique,
                                              {{"message", instruction.text}, {"response", current.response}});
    critique_request.temperature = options.temperature;
    critique_request.max_tokens = options.max_tokens;
    critique_request.kind = CallKind::kCritique;
    current.critique = gateway_.complete(critique_request).text;
    current.feedback = FeedbackBlock::from_critique(*current.critique).body;

    RefinementIteration next;
    next.prompt = catalog_.render(TemplateId::kRefineWithCritique, {{"message", instruction.text},
                                                                    {"response", current.response},
                                                                    {"feedback", current.feedback}});
    auto refined = refine(next.prompt, model_id, options);
    if (!refined) {
      trace.stop_reason = StopReason::kParseFailure;
      break;
    }
    next.response = std::move(*refined);
    trace.iterations.push_back(std::move(next));
  }
  trace.validate();
  return trace;
}

CandidateSet SelfImprover::best_of_n(const Instruction& instruction, const std::string& model_id, int n,
                                     ScorerKind scorer, const BestOfNOptions& options) const {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "best-of-n needs n >= 2");
  if (options.sampling.temperature && *options.sampling.temperature <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "best-of-n sampling temperature must be > 0");
  }
  if (scorer == ScorerKind::kExternal && !options.external) {
    throw Error(ErrorCode::kInvalidArgument, "external scorer selected but none configured");
  }

  std::vector<CompletionRequest> requests;
  for (int i = 0; i < n; ++i) {
    CompletionRequest r;
    r.model_id = model_id;
    r.prompt = instruction.text;
    r.temperature = options.sampling.temperature;
    r.max_tokens = options.sampling.max_tokens;
    r.sample_tag = static_cast<std::uint32_t>(i);
    r.kind = CallKind::kGeneration;
    requests.push_back(std::move(r));
  }
  const auto outcomes = gateway_.complete_many(requests, options.eval.max_in_flight);

  CandidateSet set;
  set.instruction_id = instruction.id;
  set.selecting_scorer = std::string(to_string(scorer));
  for (const auto& o : outcomes) set.candidates.push_back(Candidate{o.value().text, {}});

  std::vector<std::optional<ScoreValue>> scores(set.candidates.size());
  switch (scorer) {
    case ScorerKind::kStick: {
      auto checklist = options.checklist;
      if (!checklist) {
        checklist = std::make_shared<const Checklist>(
            ChecklistGenerator(gateway_, catalog_)
                .generate(instruction, options.eval.judge_model_id, options.checklist_generation));
      }
      const Evaluator evaluator(gateway_, catalog_, options.eval);
      for (std::size_t i = 0; i < set.candidates.size(); ++i) {
        const auto e = evaluator.evaluate_checklist(instruction, set.candidates[i].text, *checklist,
                                                    "candidate" + std::to_string(i));
        scores[i] = e.pass_rate();
      }
      break;
    }
    case ScorerKind::kDirectSelfScore: {
      const Evaluator evaluator(gateway_, catalog_, options.eval);
      for (std::size_t i = 0; i < set.candidates.size(); ++i) {
        try {
          scores[i] = Rational(evaluator.direct_score(instruction, set.candidates[i].text));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kScoreUnparseable) throw;
          spdlog::warn("candidate {} of '{}' unscored: {}", i, instruction.id, e.what());
        }
      }
      break;
    }
    case ScorerKind::kExternal:
      for (std::size_t i = 0; i < set.candidates.size(); ++i) {
        scores[i] = options.external(instruction, set.candidates[i].text);
      }
      break;
  }

  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i]) set.candidates[i].scores[set.selecting_scorer] = *scores[i];
  }
  set.selected = argmax_set(scores);
  if (set.selected.empty()) {
    throw Error(ErrorCode::kScorerFailed, "no candidate of '" + instruction.id + "' could be scored");
  }
  set.validate();
  return set;
}

namespace {

void check_selection(const std::vector<std::size_t>& selected, std::size_t size) {
  if (selected.empty()) throw Error(ErrorCode::kEmptySelection, "no candidates selected");
  for (auto i : selected) {
    if (i >= size) throw Error(ErrorCode::kInvalidArgument, "selected index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

double selection_precision(const std::vector<std::size_t>& selected, std::span<const double> true_scores) {
  check_selection(selected, true_scores.size());
  const double best = *std::max_element(true_scores.begin(), true_scores.end());
  const auto hits = std::count_if(selected.begin(), selected.end(), [&](std::size_t i) { return true_scores[i] == best; });
  return static_cast<double>(hits) / static_cast<double>(selected.size());
}

double average_selected_score(const std::vector<std::size_t>& selected, std::span<const double> true_scores) {
  check_selection(selected, true_scores.size());
  double sum = 0.0;
  for (auto i : selected) sum += true_scores[i];
  return sum / static_cast<double>(selected.size());
}

}  // namespace tick
