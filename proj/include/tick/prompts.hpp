#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tick {

enum class TemplateId {
  kChecklistGeneration,
  kChecklistEvaluation,
  kPreference,
  kDirectScoring,
  kCheckThenScore,
  kRefineWithChecklist,
  kUnstructuredCritique,
  kRefineWithCritique,
  kCategoryTagging,
};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::kChecklistGeneration, TemplateId::kChecklistEvaluation, TemplateId::kPreference,
    TemplateId::kDirectScoring,       TemplateId::kCheckThenScore,      TemplateId::kRefineWithChecklist,
    TemplateId::kUnstructuredCritique, TemplateId::kRefineWithCritique, TemplateId::kCategoryTagging,
};

std::string_view to_string(TemplateId id);
/// Throws kUnknownTemplate.
TemplateId parse_template_id(std::string_view name);

using Bindings = std::map<std::string, std::string>;

/// Placeholder names ({name} with name in [a-z0-9_]) in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

struct PromptTemplate {
  TemplateId id;
  std::string body;
  std::set<std::string> required_slots;
  std::optional<std::string> few_shot_slot;

  /// Parses a template file: a front-matter block delimited by "---" lines
  /// declaring template_id, required_slots and optionally few_shot_slot,
  /// followed by the body. Line endings are normalized to "\n".
  static PromptTemplate parse(std::string_view file_text);

  /// The body must contain exactly required_slots plus the few-shot slot.
  void validate() const;
};

class TemplateCatalog {
 public:
  /// Templates compiled into the binary from the repository's templates/ dir.
  static const TemplateCatalog& builtin();
  /// Built-in catalog with every "*.txt" template in `dir` replacing its
  /// built-in counterpart.
  static TemplateCatalog with_overrides(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;

  /// Substitutes every placeholder in one pass; bound text is inserted as is
  /// and never rescanned. The few-shot slot, when unbound, renders empty.
  std::string render(TemplateId id, const Bindings& bindings) const;
  std::string render(std::string_view template_name, const Bindings& bindings) const;

  /// Bundled exemplars; only checklist_generation has any (kNotFewShot otherwise).
  const std::string& default_few_shot(TemplateId id) const;

 private:
  std::map<TemplateId, PromptTemplate> templates_;
  std::string checklist_examples_;
};

}  // namespace tick
