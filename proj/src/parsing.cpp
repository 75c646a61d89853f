#include "tick/parsing.hpp"

#include <charconv>

#include "tick/text_util.hpp"

namespace tick {

namespace {

std::string_view first_line(std::string_view text) {
  const auto nl = text.find('\n');
  return nl == std::string_view::npos ? text : text.substr(0, nl);
}

// Strips whitespace, markdown emphasis, quotes and trailing sentence punctuation.
std::string_view strip_decorations(std::string_view token) {
  constexpr std::string_view kEdge = " \t\r*_`\"'";
  constexpr std::string_view kTrailing = " \t\r*_`\"'.!,;:)";
  while (!token.empty() && kEdge.find(token.front()) != std::string_view::npos) token.remove_prefix(1);
  while (!token.empty() && kTrailing.find(token.back()) != std::string_view::npos) token.remove_suffix(1);
  return token;
}

}  // namespace

std::optional<std::string_view> final_answer_payload(std::string_view text) {
  const auto pos = text.rfind(kAnswerMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  return text.substr(pos + kAnswerMarker.size());
}

std::string rationale_before_answer(std::string_view text) {
  const auto pos = text.rfind(kAnswerMarker);
  return std::string(trim(pos == std::string_view::npos ? text : text.substr(0, pos)));
}

std::optional<BinaryAnswer> parse_yes_no(std::string_view text) {
  const auto payload = final_answer_payload(text);
  if (!payload) return std::nullopt;
  const std::string token = to_lower(strip_decorations(first_line(trim(*payload))));
  if (token == "yes") return BinaryAnswer::kYes;
  if (token == "no") return BinaryAnswer::kNo;
  return std::nullopt;
}

std::optional<int> parse_int_answer(std::string_view text, int lo, int hi) {
  const auto payload = final_answer_payload(text);
  if (!payload) return std::nullopt;
  const auto token = strip_decorations(first_line(trim(*payload)));
  int value = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || end != token.data() + token.size()) return std::nullopt;
  if (value < lo || value > hi) return std::nullopt;
  return value;
}

std::optional<std::string> parse_refined_response(std::string_view text) {
  const auto payload = final_answer_payload(text);
  if (!payload) return std::nullopt;
  std::string_view body = *payload;
  // Drop the separator after the marker, keep the response's own layout.
  while (!body.empty() && (body.front() == ' ' || body.front() == '\t')) body.remove_prefix(1);
  if (!body.empty() && body.front() == '\n') body.remove_prefix(1);
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r' || body.back() == ' ')) body.remove_suffix(1);
  if (trim(body).empty()) return std::nullopt;
  return std::string(body);
}

std::optional<std::vector<std::string>> parse_label_list(std::string_view text) {
  const auto payload = final_answer_payload(text);
  if (!payload) return std::nullopt;
  const auto line = trim(first_line(trim(*payload)));
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (start <= line.size()) {
    auto sep = line.find_first_of(",;", start);
    if (sep == std::string_view::npos) sep = line.size();
    const auto label = strip_decorations(line.substr(start, sep - start));
    if (!label.empty() && to_lower(label) != "none") labels.emplace_back(label);
    start = sep + 1;
  }
  return labels;
}

}  // namespace tick
