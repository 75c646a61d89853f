#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tick/gateway.hpp"
#include "tick/metrics.hpp"
#include "tick/prompts.hpp"
#include "tick/types.hpp"

namespace tick {

/// The sixteen question categories of the internal instruction set.
const std::vector<std::string>& default_categories();

struct TagResult {
  std::set<std::string> labels;
  /// Labels the model produced that are not in the category set.
  std::size_t dropped_unknown = 0;
  /// Both samples were unparseable; labels is empty.
  bool unparseable = false;

  friend bool operator==(const TagResult&, const TagResult&) = default;
};

struct TaggingOutcome {
  std::map<QuestionRef, TagResult> tags;
  std::size_t dropped_unknown = 0;
  std::size_t unparseable = 0;

  CategoryLabels labels() const;
};

struct TaggingOptions {
  double temperature = 0.0;
  int max_tokens = 512;
  std::size_t max_in_flight = 4;
};

/// Labels every question of every checklist with a subset of `categories`.
/// Matching is case-insensitive and returns the canonical category name.
TaggingOutcome tag_categories(Gateway& gateway, const TemplateCatalog& catalog, std::span<const Checklist> checklists,
                              const std::string& model_id, const std::vector<std::string>& categories,
                              const TaggingOptions& options = {});

std::string tagging_prompt(const TemplateCatalog& catalog, const std::vector<std::string>& categories,
                           const std::string& question);

}  // namespace tick
