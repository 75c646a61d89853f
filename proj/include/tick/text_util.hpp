#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tick {

std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text);
/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view text);
/// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view text);
/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace tick
