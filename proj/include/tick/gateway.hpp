#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tick/error.hpp"

namespace tick {

/// What a completion is used for. Only affects ledger accounting, never the
/// cache key.
enum class CallKind { kGeneration, kChecklist, kJudge, kCritique, kRefine, kTagging, kOther };
std::string_view to_string(CallKind kind);

struct CompletionRequest {
  std::string model_id;
  std::string prompt;
  /// nullopt means "provider default".
  std::optional<double> temperature;
  int max_tokens = 2048;
  /// Distinguishes repeated samples of one prompt (maj@k votes, Best-of-N).
  std::uint32_t sample_tag = 0;
  CallKind kind = CallKind::kOther;

  /// Hash of (model_id, prompt, temperature, sample_tag) and nothing else.
  std::string cache_key() const;
  std::string prompt_hash() const;
  void validate() const;
};

struct CompletionResult {
  std::string text;
  std::string model_id;
  std::int64_t latency_ms = 0;
  bool cached = false;
};

/// A source of completions. Implementations throw tick::Error; only
/// kProviderUnreachable is retried by the gateway.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Either a result or the error that request ended with.
struct CompletionOutcome {
  std::optional<CompletionResult> result;
  std::optional<Error> error;

  bool ok() const noexcept { return result.has_value(); }
  /// Returns the result or rethrows the stored error.
  const CompletionResult& value() const;
};

struct GatewayOptions {
  bool cache_enabled = true;
  /// When set, cache entries are also persisted as content-addressed files.
  std::optional<std::filesystem::path> cache_dir;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  /// Maximum number of backend invocations; nullopt = unlimited.
  std::optional<std::uint64_t> max_requests;
  /// Gateway-wide cap on concurrently outstanding backend calls.
  std::size_t max_in_flight = 8;
};

struct LedgerCounts {
  std::uint64_t requests = 0;       ///< complete() calls
  std::uint64_t backend_calls = 0;  ///< backend invocations including retries
  std::uint64_t cache_hits = 0;
  std::uint64_t failures = 0;

  friend bool operator==(const LedgerCounts&, const LedgerCounts&) = default;
};

struct Ledger {
  std::map<std::string, LedgerCounts> by_kind;
  LedgerCounts total;
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void register_backend(const std::string& model_id, std::shared_ptr<Backend> backend);
  bool has_model(const std::string& model_id) const;

  CompletionResult complete(const CompletionRequest& request);

  /// Results are aligned with `requests`; a failing request never aborts its
  /// siblings.
  std::vector<CompletionOutcome> complete_many(const std::vector<CompletionRequest>& requests,
                                               std::size_t max_in_flight);

  Ledger ledger() const;
  /// Prompt hashes of every request, in issue order.
  std::vector<std::string> call_log() const;
  std::size_t call_log_size() const;
  const GatewayOptions& options() const noexcept { return options_; }

 private:
  std::string invoke_with_retry(Backend& backend, const CompletionRequest& request);
  std::optional<std::string> read_disk_cache(const std::string& key) const;
  void write_disk_cache(const std::string& key, const CompletionRequest& request, const std::string& text) const;
  LedgerCounts& counts_for(CallKind kind);

  GatewayOptions options_;
  mutable std::mutex mutex_;
  std::condition_variable slot_freed_;
  std::size_t outstanding_ = 0;
  bool budget_exhausted_ = false;
  std::unordered_map<std::string, std::shared_ptr<Backend>> backends_;
  std::unordered_map<std::string, std::shared_future<std::string>> cache_;
  Ledger ledger_;
  std::vector<std::string> call_log_;
};

}  // namespace tick
