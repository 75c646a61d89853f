#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tick {

enum class ErrorCode {
  // gateway
  kUnknownModel,
  kProviderUnreachable,
  kBudgetExceeded,
  kNoMatch,
  // prompts
  kMissingSlot,
  kUnknownTemplate,
  kNotFewShot,
  // parsing
  kMissingAnswerMarker,
  kAmbiguousAnswerMarker,
  kEmptyAnswerBlock,
  kGenerationUnparseable,
  kScoreUnparseable,
  kPreferenceUnparseable,
  kRefinementUnparseable,
  kScorerFailed,
  // metrics / arithmetic
  kEmptyInput,
  kLengthMismatch,
  kOutOfRange,
  kInsufficientData,
  kConstantSeries,
  kEvenLength,
  kUnknownQuestionRef,
  kEmptySelection,
  // io
  kParseError,
  kInvariantViolation,
  kUnknownRunId,
  kWriteFailure,
  kMissingArtifacts,
  // generic
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and tests) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  /// 1-based line number for dataset parse failures.
  std::optional<std::size_t> line() const noexcept { return line_; }
  bool retryable() const noexcept { return code_ == ErrorCode::kProviderUnreachable; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace tick
