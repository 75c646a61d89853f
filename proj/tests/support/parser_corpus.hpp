#pragma once

// Fixture completions and their expected readings. Each case either parses to
// `expected` or is rejected (nullopt for the optional-returning parsers,
// `error` for checklist generation output).

#include <optional>
#include <string>
#include <vector>

#include "tick/checklist_gen.hpp"
#include "tick/error.hpp"
#include "tick/parsing.hpp"

namespace tick::testing {

enum class ParseKind { kYesNo, kScore, kPreference, kChecklist, kRefine, kLabels };

struct ParserCase {
  std::string name;
  ParseKind kind;
  std::string text;
  std::optional<std::vector<std::string>> expected;  ///< nullopt = must be rejected
  std::optional<ErrorCode> error;                    ///< checklist rejections only
};

inline std::vector<ParserCase> parser_corpus() {
  using K = ParseKind;
  using V = std::vector<std::string>;
  return {
      {"yes_plain", K::kYesNo, "Analysis: The text meets the requirement.\nAnswer: YES", V{"YES"}, {}},
      {"no_lowercase", K::kYesNo, "Analysis: Missing the date.\nAnswer: no", V{"NO"}, {}},
      {"yes_bold_marker", K::kYesNo, "Analysis: Fine.\n**Answer:** YES", V{"YES"}, {}},
      {"yes_trailing_period", K::kYesNo, "Analysis: ok\nAnswer: Yes.", V{"YES"}, {}},
      {"yes_quoted", K::kYesNo, "Analysis: ok\nAnswer: 'NO'", V{"NO"}, {}},
      {"marker_in_cot_last_wins", K::kYesNo,
       "Analysis: A hasty reader might write Answer: NO here, but every sentence is in the second person.\nAnswer: YES",
       V{"YES"}, {}},
      {"yes_then_trailing_line", K::kYesNo, "Analysis: ok\nAnswer: YES\nThat is my final decision.", V{"YES"}, {}},
      {"missing_marker", K::kYesNo, "The response is good, so YES.", std::nullopt, {}},
      {"hedged_answer", K::kYesNo, "Analysis: unclear\nAnswer: YES or NO", std::nullopt, {}},
      {"empty_answer", K::kYesNo, "Analysis: unclear\nAnswer:", std::nullopt, {}},
      {"score_plain", K::kScore, "Analysis: Solid but long.\nAnswer: 4", V{"4"}, {}},
      {"score_bold", K::kScore, "Analysis: Excellent.\nAnswer: **5**", V{"5"}, {}},
      {"score_trailing_period", K::kScore, "Analysis: ok\nAnswer: 3.", V{"3"}, {}},
      {"score_marker_in_cot", K::kScore, "Analysis: At first the Answer: 2 seemed right, then I reconsidered.\nAnswer: 3",
       V{"3"}, {}},
      {"score_out_of_range_high", K::kScore, "Analysis: Great.\nAnswer: 7", std::nullopt, {}},
      {"score_out_of_range_zero", K::kScore, "Analysis: Awful.\nAnswer: 0", std::nullopt, {}},
      {"score_fraction", K::kScore, "Analysis: ok\nAnswer: 4/5", std::nullopt, {}},
      {"score_word", K::kScore, "Analysis: ok\nAnswer: four", std::nullopt, {}},
      {"preference_first", K::kPreference, "Analysis: A follows the format.\nAnswer: 1", V{"1"}, {}},
      {"preference_second", K::kPreference, "Analysis: B is more complete.\nAnswer: 3", V{"3"}, {}},
      {"preference_out_of_range", K::kPreference, "Analysis: ok\nAnswer: 4", std::nullopt, {}},
      {"preference_named", K::kPreference, "Analysis: ok\nAnswer: Response A", std::nullopt, {}},
      {"checklist_bulleted", K::kChecklist,
       "Analysis: Two requirements.\nAnswer:\n- Is the reply under 50 words?\n- Does it mention Paris?",
       V{"Is the reply under 50 words?", "Does it mention Paris?"}, {}},
      {"checklist_numbered", K::kChecklist,
       "Analysis: Three requirements.\nAnswer:\n1. Is it a poem?\n2) Does it rhyme?\n10. Is it about the sea?",
       V{"Is it a poem?", "Does it rhyme?", "Is it about the sea?"}, {}},
      {"checklist_plain_lines", K::kChecklist,
       "Analysis: Simple.\nAnswer: Is the tone formal?\nIs the email addressed to the manager?",
       V{"Is the tone formal?", "Is the email addressed to the manager?"}, {}},
      {"checklist_mixed_bullets", K::kChecklist,
       "Analysis: Mixed.\nAnswer:\n* Is it JSON?\n\xe2\x80\xa2 Does it have a \"name\" key?\n+ Is the value a string?",
       V{"Is it JSON?", "Does it have a \"name\" key?", "Is the value a string?"}, {}},
      {"checklist_blank_lines", K::kChecklist, "Analysis: ok\nAnswer:\n\n- Is it short?\n\n\n- Is it polite?\n\n",
       V{"Is it short?", "Is it polite?"}, {}},
      {"checklist_bold_marker", K::kChecklist, "Analysis: ok\n**Answer:**\n- Does it list three items?",
       V{"Does it list three items?"}, {}},
      {"checklist_inline_marker_in_cot", K::kChecklist,
       "Analysis: The Answer: section should cover length.\nAnswer: - Is it under 100 words?",
       V{"Is it under 100 words?"}, {}},
      {"checklist_missing_marker", K::kChecklist, "Analysis: I think we should ask\n- Is it short?", std::nullopt,
       ErrorCode::kMissingAnswerMarker},
      {"checklist_two_markers", K::kChecklist, "Analysis: ok\nAnswer: - Is it short?\nAnswer: - Is it long?",
       std::nullopt, ErrorCode::kAmbiguousAnswerMarker},
      {"checklist_empty_block", K::kChecklist, "Analysis: ok\nAnswer:\n\n   \n", std::nullopt,
       ErrorCode::kEmptyAnswerBlock},
      {"refine_single_line", K::kRefine, "Plan: Shorten it.\nAnswer: The meeting is on Thursday.",
       V{"The meeting is on Thursday."}, {}},
      {"refine_multi_line", K::kRefine, "Plan: Add bullets.\nAnswer:\n- first point\n- second point\n",
       V{"- first point\n- second point"}, {}},
      {"refine_marker_in_plan", K::kRefine, "Plan: The Answer: must be shorter.\nAnswer: Short text.",
       V{"Short text."}, {}},
      {"refine_missing_marker", K::kRefine, "Plan: I will rewrite it.\nHere is the text.", std::nullopt, {}},
      {"refine_empty", K::kRefine, "Plan: none\nAnswer:   \n", std::nullopt, {}},
      {"labels_two", K::kLabels, "Analysis: Length and tone.\nAnswer: Length, Tone", V{"Length", "Tone"}, {}},
      {"labels_semicolon", K::kLabels, "Analysis: ok\nAnswer: Tone; Concision", V{"Tone", "Concision"}, {}},
      {"labels_none", K::kLabels, "Analysis: Nothing fits.\nAnswer: none", V{}, {}},
      {"labels_missing_marker", K::kLabels, "Length, Tone", std::nullopt, {}},
  };
}

struct CaseOutcome {
  bool ok = false;
  std::string detail;
};

inline std::string join(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " | " : "") + v[i];
  return out + "]";
}

inline CaseOutcome run_parser_case(const ParserCase& c) {
  std::optional<std::vector<std::string>> got;
  std::optional<ErrorCode> error;
  switch (c.kind) {
    case ParseKind::kYesNo:
      if (auto v = parse_yes_no(c.text)) got = std::vector<std::string>{std::string(to_string(*v))};
      break;
    case ParseKind::kScore:
      if (auto v = parse_int_answer(c.text, 1, 5)) got = std::vector<std::string>{std::to_string(*v)};
      break;
    case ParseKind::kPreference:
      if (auto v = parse_int_answer(c.text, 1, 3)) got = std::vector<std::string>{std::to_string(*v)};
      break;
    case ParseKind::kChecklist:
      try {
        got = parse_checklist(c.text);
      } catch (const Error& e) {
        error = e.code();
      }
      break;
    case ParseKind::kRefine:
      if (auto v = parse_refined_response(c.text)) got = std::vector<std::string>{*v};
      break;
    case ParseKind::kLabels:
      got = parse_label_list(c.text);
      break;
  }
  if (c.expected) {
    if (!got) return {false, "rejected, expected " + join(*c.expected)};
    if (*got != *c.expected) return {false, "read " + join(*got) + ", expected " + join(*c.expected)};
    return {true, ""};
  }
  if (got) return {false, "silently read " + join(*got)};
  if (c.error && error != c.error) {
    return {false, std::string("wrong error ") + (error ? std::string(to_string(*error)) : "none")};
  }
  return {true, ""};
}

}  // namespace tick::testing
