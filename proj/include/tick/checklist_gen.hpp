#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tick/gateway.hpp"
#include "tick/prompts.hpp"
#include "tick/types.hpp"

namespace tick {

struct RawGenerationOutput {
  std::string analysis;
  std::string answer_block;
};

/// Splits a generation completion at its line-leading "Answer:" marker, which
/// must occur exactly once (kMissingAnswerMarker / kAmbiguousAnswerMarker).
RawGenerationOutput split_generation_output(std::string_view raw);

/// Question lines of the answer block with bullet/number prefixes removed and
/// blank lines dropped, order preserved. Throws kEmptyAnswerBlock when nothing
/// is left. Does not validate the questions themselves.
std::vector<std::string> parse_checklist(std::string_view raw);

struct GenerationOptions {
  /// Re-samples after a parse/validation failure (total attempts = retries + 1).
  int retries = 2;
  /// nullopt = provider default; a second checklist must be able to differ.
  std::optional<double> temperature;
  int max_tokens = 1024;
};

class ChecklistGenerator {
 public:
  ChecklistGenerator(Gateway& gateway, const TemplateCatalog& catalog) : gateway_(gateway), catalog_(catalog) {}

  std::string render_prompt(const Instruction& instruction) const;

  /// Attempt r uses sample tag first_tag + r * tag_stride. Throws
  /// kGenerationUnparseable carrying the last raw text once attempts run out.
  Checklist generate(const Instruction& instruction, const std::string& model_id,
                     const GenerationOptions& options = {}, std::uint32_t first_tag = 0,
                     std::uint32_t tag_stride = 1) const;

  /// Two independently sampled checklists (sample tags interleave, so neither
  /// attempt sequence overlaps the other).
  std::pair<Checklist, Checklist> generate_pair(const Instruction& instruction, const std::string& model_id,
                                                const GenerationOptions& options = {}) const;

 private:
  Gateway& gateway_;
  const TemplateCatalog& catalog_;
};

}  // namespace tick
