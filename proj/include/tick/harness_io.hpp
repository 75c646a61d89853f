#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tick/gateway.hpp"
#include "tick/types.hpp"

namespace tick {

inline constexpr int kDatasetSchemaVersion = 1;

/// One line of a dataset file.
struct DatasetRecord {
  Instruction instruction;
  /// (model_id, text) in file order; the first two are response A and B.
  std::vector<std::pair<std::string, std::string>> responses;
  std::optional<Checklist> checklist;
  std::optional<std::vector<BinaryAnswer>> gold_answers;
  /// Raw 1-5 slider values (1 = first response much better).
  std::optional<std::vector<int>> human_preferences;

  void validate() const;
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Keys keep file order so responses stay in sequence.
nlohmann::ordered_json encode(const DatasetRecord& record);
/// Throws kParseError / kInvariantViolation carrying `line`.
DatasetRecord parse_dataset_record(const nlohmann::json& j, std::size_t line);

/// UTF-8, one JSON record per line with "schema": 1; blank lines are skipped.
/// Instruction ids must be unique.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

struct Artifact {
  std::string kind;
  std::string item_id;
  /// Digest of the prompts that produced this artifact.
  std::string prompt_hash;
  nlohmann::json payload;

  friend bool operator==(const Artifact&, const Artifact&) = default;
};

struct RunRecord {
  std::string run_id;
  std::string timestamp;
  nlohmann::json config = nlohmann::json::object();
  std::vector<Artifact> artifacts;
  nlohmann::json ledger = nlohmann::json::object();

  std::vector<const Artifact*> of_kind(std::string_view kind) const;
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

nlohmann::json encode(const Ledger& ledger);

/// Order-independent digest over a set of prompt hashes.
std::string digest_prompt_hashes(std::vector<std::string> hashes);

/// Directory per run: meta.json, config.json, artifacts.jsonl, ledger.json.
/// Runs are written once; an existing run directory is never overwritten.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  /// Assigns a fresh run_id (and timestamp when empty) and writes the run.
  std::string persist(RunRecord& run) const;
  RunRecord load(const std::string& run_id) const;
  bool exists(const std::string& run_id) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

enum class ReportKind { kDrfr, kAgreement, kSimilarity, kRefinement, kBestOfN, kCategorical };
std::string_view to_string(ReportKind kind);
ReportKind parse_report_kind(std::string_view text);

struct Report {
  ReportKind kind;
  std::string tsv;      ///< tab-separated table with a header row
  std::string summary;  ///< human-readable text block
};

/// Pure function of the run's artifacts; kMissingArtifacts when the run holds
/// nothing of the requested kind.
Report emit_report(const RunRecord& run, ReportKind kind);
/// Writes <dir>/<kind>.tsv and <dir>/<kind>.txt.
void write_report(const Report& report, const std::filesystem::path& dir);

}  // namespace tick
