#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tick/gateway.hpp"

namespace tick {

/// One scripted reply rule. A rule matches when the prompt hash equals
/// `prompt_sha256` (if set) and the prompt contains every string in
/// `contains`. A rule with neither condition matches everything.
struct ScriptRule {
  std::optional<std::string> prompt_sha256;
  std::vector<std::string> contains;
  /// Sample tag t receives responses[min(t, size-1)].
  std::vector<std::string> responses;
};

/// Deterministic backend for tests and offline runs. The reply is a pure
/// function of (prompt, sample_tag): hash rules are tried first, then
/// substring rules in script order.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules);

  /// Script file: {"rules": [{"contains": [...], "prompt_sha256": "...", "responses": [...]}]}
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& script);
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  std::string complete(const CompletionRequest& request) override;

  std::uint64_t invocations() const noexcept { return invocations_.load(); }

 private:
  std::vector<ScriptRule> rules_;
  std::atomic<std::uint64_t> invocations_{0};
};

/// Wraps another backend and appends every exchange to a transcript file,
/// one JSON record per line.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, std::filesystem::path transcript);
  std::string complete(const CompletionRequest& request) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::filesystem::path transcript_;
  std::mutex mutex_;
};

/// Serves completions from a transcript written by RecordingBackend. Unknown
/// requests raise kNoMatch.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& transcript);
  std::string complete(const CompletionRequest& request) override;
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

/// OpenAI-style chat completions endpoint.
struct ProviderConfig {
  std::string name;
  std::string endpoint;   ///< e.g. https://api.openai.com/v1/chat/completions
  std::string token_env;  ///< environment variable holding the bearer token
  /// model_id suffix -> provider model name; registered as "<name>/<suffix>".
  std::map<std::string, std::string> models;
  int timeout_seconds = 120;
};

std::vector<ProviderConfig> parse_providers(const nlohmann::json& j);

class HttpChatBackend : public Backend {
 public:
  HttpChatBackend(ProviderConfig provider, std::string provider_model);
  std::string complete(const CompletionRequest& request) override;

 private:
  ProviderConfig provider_;
  std::string provider_model_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Registers one HttpChatBackend per configured model.
void register_providers(Gateway& gateway, const std::vector<ProviderConfig>& providers);

}  // namespace tick
