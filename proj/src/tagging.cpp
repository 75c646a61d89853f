#include "tick/tagging.hpp"

#include <spdlog/spdlog.h>

#include "tick/parsing.hpp"
#include "tick/text_util.hpp"

namespace tick {

const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> kCategories = {
      "Classification",          "Concision",         "Data Manipulation",   "Document Generation",
      "Exclusion: Keyword",      "Exclusion: Topic",  "Extraction",          "File Formatting: JSON",
      "File Formatting: TSV/CSV", "Formatting: General", "Inclusion: Keyword", "Inclusion: Topic",
      "Knowledge Retrieval",     "Length",            "Subjective QA",       "Tone",
  };
  return kCategories;
}

CategoryLabels TaggingOutcome::labels() const {
  CategoryLabels out;
  for (const auto& [ref, result] : tags) out[ref] = result.labels;
  return out;
}

std::string tagging_prompt(const TemplateCatalog& catalog, const std::vector<std::string>& categories,
                           const std::string& question) {
  std::string list;
  for (const auto& c : categories) list += "- " + c + "\n";
  if (!list.empty()) list.pop_back();
  return catalog.render(TemplateId::kCategoryTagging, {{"categories", list}, {"question", question}});
}

namespace {

std::optional<TagResult> interpret(const std::string& text, const std::map<std::string, std::string>& canonical) {
  const auto raw = parse_label_list(text);
  if (!raw) return std::nullopt;
  TagResult r;
  for (const auto& label : *raw) {
    auto it = canonical.find(to_lower(label));
    if (it == canonical.end()) {
      ++r.dropped_unknown;
    } else {
      r.labels.insert(it->second);
    }
  }
  return r;
}

}  // namespace

TaggingOutcome tag_categories(Gateway& gateway, const TemplateCatalog& catalog, std::span<const Checklist> checklists,
                              const std::string& model_id, const std::vector<std::string>& categories,
                              const TaggingOptions& options) {
  if (categories.empty()) throw Error(ErrorCode::kInvalidArgument, "category set is empty");
  std::map<std::string, std::string> canonical;
  for (const auto& c : categories) canonical[to_lower(c)] = c;

  std::vector<QuestionRef> refs;
  std::vector<CompletionRequest> requests;
  for (const auto& checklist : checklists) {
    for (const auto& q : checklist.questions()) {
      refs.push_back(QuestionRef{checklist.instruction_id(), q.index});
      CompletionRequest r;
      r.model_id = model_id;
      r.prompt = tagging_prompt(catalog, categories, q.text);
      r.temperature = options.temperature;
      r.max_tokens = options.max_tokens;
      r.kind = CallKind::kTagging;
      requests.push_back(std::move(r));
    }
  }

  TaggingOutcome outcome;
  std::vector<std::optional<TagResult>> results(requests.size());
  std::vector<std::size_t> retry;
  auto first = gateway.complete_many(requests, options.max_in_flight);
  for (std::size_t i = 0; i < first.size(); ++i) {
    results[i] = interpret(first[i].value().text, canonical);
    if (!results[i]) retry.push_back(i);
  }
  if (!retry.empty()) {
    std::vector<CompletionRequest> again;
    for (auto i : retry) {
      again.push_back(requests[i]);
      again.back().sample_tag = 1;
    }
    auto second = gateway.complete_many(again, options.max_in_flight);
    for (std::size_t j = 0; j < retry.size(); ++j) results[retry[j]] = interpret(second[j].value().text, canonical);
  }

  for (std::size_t i = 0; i < refs.size(); ++i) {
    TagResult r;
    if (results[i]) {
      r = *results[i];
    } else {
      r.unparseable = true;
      ++outcome.unparseable;
      spdlog::warn("tagging of {}#{} unparseable after re-sample", refs[i].instruction_id, refs[i].question_index);
    }
    outcome.dropped_unknown += r.dropped_unknown;
    outcome.tags[refs[i]] = std::move(r);
  }
  if (outcome.dropped_unknown > 0) spdlog::warn("dropped {} labels outside the category set", outcome.dropped_unknown);
  return outcome;
}

}  // namespace tick
