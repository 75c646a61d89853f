#pragma once

// Readers for the "Analysis: ... / Answer: ..." output format shared by every
// judge and refinement template. The final "Answer:" occurrence wins, since
// chain-of-thought text may itself mention the marker.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tick/types.hpp"

namespace tick {

inline constexpr std::string_view kAnswerMarker = "Answer:";

/// Everything after the last "Answer:" marker, or nullopt when absent.
std::optional<std::string_view> final_answer_payload(std::string_view text);
/// Text preceding the last marker (the rationale), trimmed.
std::string rationale_before_answer(std::string_view text);

/// YES/NO on the final answer line, case-insensitive, optional trailing
/// punctuation and markdown emphasis.
std::optional<BinaryAnswer> parse_yes_no(std::string_view text);
/// Integer on the final answer line, rejected (not clamped) outside [lo, hi].
std::optional<int> parse_int_answer(std::string_view text, int lo, int hi);
/// Multi-line response after the final marker; nullopt if missing or blank.
std::optional<std::string> parse_refined_response(std::string_view text);
/// Comma/semicolon separated labels on the final answer line. An empty list
/// (or "none") is a valid answer.
std::optional<std::vector<std::string>> parse_label_list(std::string_view text);

}  // namespace tick
