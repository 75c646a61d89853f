#include "tick/checklist_gen.hpp"

#include <cctype>

#include <spdlog/spdlog.h>

#include "tick/parsing.hpp"
#include "tick/text_util.hpp"

namespace tick {

namespace {

// "Answer:" at the start of a line, allowing leading spaces and markdown bold.
std::optional<std::size_t> line_marker_offset(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '*' || line[i] == '#')) ++i;
  if (line.substr(i, kAnswerMarker.size()) != kAnswerMarker) return std::nullopt;
  i += kAnswerMarker.size();
  while (i < line.size() && line[i] == '*') ++i;
  return i;
}

std::string_view strip_list_prefix(std::string_view line) {
  line = trim(line);
  for (std::string_view bullet : {"-", "*", "•", "+"}) {
    if (line.substr(0, bullet.size()) == bullet &&
        (line.size() == bullet.size() || std::isspace(static_cast<unsigned char>(line[bullet.size()])))) {
      return trim(line.substr(bullet.size()));
    }
  }
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
    const auto rest = line.substr(digits + 1);
    if (rest.empty() || std::isspace(static_cast<unsigned char>(rest.front()))) return trim(rest);
  }
  return line;
}

}  // namespace

RawGenerationOutput split_generation_output(std::string_view raw) {
  const auto lines = split_lines(raw);
  std::optional<std::size_t> marker_line;
  std::size_t payload_offset = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto off = line_marker_offset(lines[i])) {
      if (marker_line) throw Error(ErrorCode::kAmbiguousAnswerMarker, "more than one 'Answer:' line");
      marker_line = i;
      payload_offset = *off;
    }
  }
  if (!marker_line) throw Error(ErrorCode::kMissingAnswerMarker, "no 'Answer:' line in generation output");

  RawGenerationOutput out;
  for (std::size_t i = 0; i < *marker_line; ++i) {
    out.analysis.append(lines[i]);
    out.analysis.push_back('\n');
  }
  out.analysis = std::string(trim(out.analysis));
  if (out.analysis.rfind("Analysis:", 0) == 0) out.analysis = std::string(trim(out.analysis.substr(9)));

  out.answer_block = std::string(lines[*marker_line].substr(payload_offset));
  for (std::size_t i = *marker_line + 1; i < lines.size(); ++i) {
    out.answer_block.push_back('\n');
    out.answer_block.append(lines[i]);
  }
  return out;
}

std::vector<std::string> parse_checklist(std::string_view raw) {
  const auto output = split_generation_output(raw);
  std::vector<std::string> questions;
  for (auto line : split_lines(output.answer_block)) {
    const auto q = strip_list_prefix(line);
    if (!q.empty()) questions.emplace_back(q);
  }
  if (questions.empty()) throw Error(ErrorCode::kEmptyAnswerBlock, "answer block has no questions");
  return questions;
}

std::string ChecklistGenerator::render_prompt(const Instruction& instruction) const {
  return catalog_.render(TemplateId::kChecklistGeneration,
                         {{"message", instruction.text},
                          {"examples", catalog_.default_few_shot(TemplateId::kChecklistGeneration)}});
}

Checklist ChecklistGenerator::generate(const Instruction& instruction, const std::string& model_id,
                                       const GenerationOptions& options, std::uint32_t first_tag,
                                       std::uint32_t tag_stride) const {
  CompletionRequest request;
  request.model_id = model_id;
  request.prompt = render_prompt(instruction);
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  request.kind = CallKind::kChecklist;

  std::string last_raw;
  std::string last_problem;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    request.sample_tag = first_tag + static_cast<std::uint32_t>(attempt) * tag_stride;
    last_raw = gateway_.complete(request).text;
    try {
      return Checklist(instruction.id, parse_checklist(last_raw), Provenance::generated(model_id));
    } catch (const Error& e) {
      last_problem = e.what();
      spdlog::debug("checklist for '{}' rejected (attempt {}): {}", instruction.id, attempt + 1, last_problem);
    }
  }
  throw Error(ErrorCode::kGenerationUnparseable,
              "instruction '" + instruction.id + "': " + last_problem + "; last output: " + last_raw);
}

std::pair<Checklist, Checklist> ChecklistGenerator::generate_pair(const Instruction& instruction,
                                                                  const std::string& model_id,
                                                                  const GenerationOptions& options) const {
  const auto sample = [&](std::uint32_t which) {
    try {
      return generate(instruction, model_id, options, which, 2);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(which + 1) + " of 2: " + e.what());
    }
  };
  Checklist first = sample(0);
  Checklist second = sample(1);
  return {std::move(first), std::move(second)};
}

}  // namespace tick
