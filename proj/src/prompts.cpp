#include "tick/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tick/error.hpp"
#include "tick/text_util.hpp"

namespace tick {

namespace detail {
// Generated at build time from templates/ (see src/CMakeLists.txt).
extern const std::vector<std::pair<std::string_view, std::string_view>> kEmbeddedTemplates;
extern const std::string_view kEmbeddedChecklistExamples;
}  // namespace detail

namespace {

constexpr std::pair<TemplateId, std::string_view> kNames[] = {
    {TemplateId::kChecklistGeneration, "checklist_generation"},
    {TemplateId::kChecklistEvaluation, "checklist_evaluation"},
    {TemplateId::kPreference, "preference"},
    {TemplateId::kDirectScoring, "direct_scoring"},
    {TemplateId::kCheckThenScore, "check_then_score"},
    {TemplateId::kRefineWithChecklist, "refine_with_checklist"},
    {TemplateId::kUnstructuredCritique, "unstructured_critique"},
    {TemplateId::kRefineWithCritique, "refine_with_critique"},
    {TemplateId::kCategoryTagging, "category_tagging"},
};

bool is_slot_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

// Calls on_text for literal runs and on_slot for each {name}.
template <typename OnText, typename OnSlot>
void scan(std::string_view body, OnText&& on_text, OnSlot&& on_slot) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = open + 1;
    while (close < body.size() && is_slot_char(body[close])) ++close;
    if (close < body.size() && body[close] == '}' && close > open + 1) {
      on_text(body.substr(pos, open - pos));
      on_slot(std::string(body.substr(open + 1, close - open - 1)));
      pos = close + 1;
    } else {
      on_text(body.substr(pos, open + 1 - pos));
      pos = open + 1;
    }
  }
  on_text(body.substr(pos));
}

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

std::set<std::string> parse_slot_list(std::string_view value) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    const auto item = trim(value.substr(start, comma - start));
    if (!item.empty()) out.emplace(item);
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  for (const auto& [tid, name] : kNames) {
    if (tid == id) return name;
  }
  return "unknown";
}

TemplateId parse_template_id(std::string_view name) {
  for (const auto& [tid, n] : kNames) {
    if (n == name) return tid;
  }
  throw Error(ErrorCode::kUnknownTemplate, "no template named '" + std::string(name) + "'");
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> out;
  scan(body, [](std::string_view) {}, [&](std::string name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
  });
  return out;
}

PromptTemplate PromptTemplate::parse(std::string_view file_text) {
  const std::string text = normalize_newlines(file_text);
  if (text.rfind("---\n", 0) != 0) throw Error(ErrorCode::kParseError, "template file lacks front-matter");
  const auto fm_end = text.find("\n---\n", 3);
  if (fm_end == std::string::npos) throw Error(ErrorCode::kParseError, "unterminated template front-matter");

  std::optional<TemplateId> id;
  PromptTemplate tmpl{};
  for (auto line : split_lines(std::string_view(text).substr(4, fm_end - 4))) {
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kParseError, "bad front-matter line '" + std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    if (key == "template_id") {
      id = parse_template_id(value);
    } else if (key == "required_slots") {
      tmpl.required_slots = parse_slot_list(value);
    } else if (key == "few_shot_slot") {
      if (!value.empty()) tmpl.few_shot_slot = std::string(value);
    } else {
      throw Error(ErrorCode::kParseError, "unknown front-matter key '" + std::string(key) + "'");
    }
  }
  if (!id) throw Error(ErrorCode::kParseError, "template front-matter lacks template_id");
  tmpl.id = *id;
  tmpl.body = text.substr(fm_end + 5);
  tmpl.validate();
  return tmpl;
}

void PromptTemplate::validate() const {
  std::set<std::string> expected = required_slots;
  if (few_shot_slot) expected.insert(*few_shot_slot);
  const auto found = placeholders(body);
  const std::set<std::string> actual(found.begin(), found.end());
  if (actual != expected) {
    std::string names;
    for (const auto& s : actual) names += (names.empty() ? "" : ", ") + s;
    throw Error(ErrorCode::kParseError,
                "template '" + std::string(to_string(id)) + "' body slots {" + names + "} do not match its declaration");
  }
}

const TemplateCatalog& TemplateCatalog::builtin() {
  static const TemplateCatalog catalog = [] {
    TemplateCatalog c;
    for (const auto& [name, text] : detail::kEmbeddedTemplates) {
      auto tmpl = PromptTemplate::parse(text);
      c.templates_.emplace(tmpl.id, std::move(tmpl));
    }
    for (auto id : kAllTemplates) {
      if (!c.templates_.count(id)) {
        throw Error(ErrorCode::kUnknownTemplate, "built-in catalog lacks " + std::string(to_string(id)));
      }
    }
    c.checklist_examples_ = normalize_newlines(detail::kEmbeddedChecklistExamples);
    return c;
  }();
  return catalog;
}

TemplateCatalog TemplateCatalog::with_overrides(const std::filesystem::path& dir) {
  TemplateCatalog c = builtin();
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kInvalidArgument, "templates directory not found: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::stringstream buf;
    buf << in.rdbuf();
    if (entry.path().filename() == "checklist_generation.examples.txt") {
      c.checklist_examples_ = normalize_newlines(buf.str());
      continue;
    }
    auto tmpl = PromptTemplate::parse(buf.str());
    c.templates_[tmpl.id] = std::move(tmpl);
  }
  return c;
}

const PromptTemplate& TemplateCatalog::get(TemplateId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(ErrorCode::kUnknownTemplate, std::string(to_string(id)));
  return it->second;
}

std::string TemplateCatalog::render(TemplateId id, const Bindings& bindings) const {
  const auto& tmpl = get(id);
  for (const auto& slot : tmpl.required_slots) {
    if (!bindings.count(slot)) throw Error(ErrorCode::kMissingSlot, slot);
  }
  std::string out;
  out.reserve(tmpl.body.size() + 256);
  scan(tmpl.body, [&](std::string_view text) { out.append(text); },
       [&](const std::string& name) {
         if (auto it = bindings.find(name); it != bindings.end()) {
           out.append(it->second);
         } else if (!(tmpl.few_shot_slot && *tmpl.few_shot_slot == name)) {
           throw Error(ErrorCode::kMissingSlot, name);
         }
       });
  return out;
}

std::string TemplateCatalog::render(std::string_view template_name, const Bindings& bindings) const {
  return render(parse_template_id(template_name), bindings);
}

const std::string& TemplateCatalog::default_few_shot(TemplateId id) const {
  const auto& tmpl = get(id);
  if (!tmpl.few_shot_slot) {
    throw Error(ErrorCode::kNotFewShot, "template '" + std::string(to_string(id)) + "' has no few-shot slot");
  }
  return checklist_examples_;
}

}  // namespace tick
