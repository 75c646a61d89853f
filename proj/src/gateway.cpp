#include "tick/gateway.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tick/text_util.hpp"

namespace tick {

using json = nlohmann::json;

std::string_view to_string(CallKind kind) {
  switch (kind) {
    case CallKind::kGeneration: return "generation";
    case CallKind::kChecklist: return "checklist";
    case CallKind::kJudge: return "judge";
    case CallKind::kCritique: return "critique";
    case CallKind::kRefine: return "refine";
    case CallKind::kTagging: return "tagging";
    case CallKind::kOther: return "other";
  }
  return "other";
}

std::string CompletionRequest::cache_key() const {
  json tuple = json::array({model_id, prompt, temperature ? json(*temperature) : json(nullptr), sample_tag});
  return sha256_hex(tuple.dump());
}

std::string CompletionRequest::prompt_hash() const { return sha256_hex(prompt); }

void CompletionRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  if (temperature && *temperature < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative temperature");
  if (max_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
}

const CompletionResult& CompletionOutcome::value() const {
  if (error) throw *error;
  return *result;
}

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
  if (options_.max_in_flight == 0) throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
  if (options_.max_attempts < 1) throw Error(ErrorCode::kInvalidArgument, "max_attempts must be >= 1");
  if (options_.cache_dir) std::filesystem::create_directories(*options_.cache_dir);
}

void Gateway::register_backend(const std::string& model_id, std::shared_ptr<Backend> backend) {
  std::lock_guard lock(mutex_);
  backends_[model_id] = std::move(backend);
}

bool Gateway::has_model(const std::string& model_id) const {
  std::lock_guard lock(mutex_);
  return backends_.count(model_id) > 0;
}

LedgerCounts& Gateway::counts_for(CallKind kind) { return ledger_.by_kind[std::string(to_string(kind))]; }

CompletionResult Gateway::complete(const CompletionRequest& request) {
  request.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::string key = request.cache_key();

  std::shared_ptr<Backend> backend;
  std::shared_future<std::string> pending;
  std::optional<std::promise<std::string>> owned;
  {
    std::lock_guard lock(mutex_);
    call_log_.push_back(request.prompt_hash());
    ++ledger_.total.requests;
    ++counts_for(request.kind).requests;
    auto it = backends_.find(request.model_id);
    if (it == backends_.end()) {
      ++ledger_.total.failures;
      ++counts_for(request.kind).failures;
      throw Error(ErrorCode::kUnknownModel, "no backend registered for '" + request.model_id + "'");
    }
    backend = it->second;
    if (options_.cache_enabled) {
      if (auto hit = cache_.find(key); hit != cache_.end()) {
        pending = hit->second;
      } else if (auto disk = read_disk_cache(key)) {
        std::promise<std::string> ready;
        ready.set_value(*disk);
        pending = ready.get_future().share();
        cache_.emplace(key, pending);
      } else {
        owned.emplace();
        cache_.emplace(key, owned->get_future().share());
      }
      if (pending.valid()) {
        ++ledger_.total.cache_hits;
        ++counts_for(request.kind).cache_hits;
      }
    }
  }

  const auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  };

  if (pending.valid()) {
    return CompletionResult{pending.get(), request.model_id, elapsed(), true};
  }

  try {
    std::string text = invoke_with_retry(*backend, request);
    if (owned) {
      owned->set_value(text);
      write_disk_cache(key, request, text);
    }
    return CompletionResult{std::move(text), request.model_id, elapsed(), false};
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      ++ledger_.total.failures;
      ++counts_for(request.kind).failures;
      // Failures are not cached; the next identical request tries again.
      if (owned) cache_.erase(key);
    }
    if (owned) owned->set_exception(std::current_exception());
    throw;
  }
}

std::string Gateway::invoke_with_retry(Backend& backend, const CompletionRequest& request) {
  auto backoff = options_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    {
      std::unique_lock lock(mutex_);
      slot_freed_.wait(lock, [&] { return outstanding_ < options_.max_in_flight; });
      if (budget_exhausted_ ||
          (options_.max_requests && ledger_.total.backend_calls >= *options_.max_requests)) {
        budget_exhausted_ = true;
        throw Error(ErrorCode::kBudgetExceeded, "request budget of " +
                                                    std::to_string(options_.max_requests.value_or(0)) +
                                                    " backend calls reached");
      }
      ++outstanding_;
      ++ledger_.total.backend_calls;
      ++counts_for(request.kind).backend_calls;
    }
    const auto release = [&] {
      {
        std::lock_guard lock(mutex_);
        --outstanding_;
      }
      slot_freed_.notify_one();
    };
    try {
      std::string text = backend.complete(request);
      release();
      return text;
    } catch (const Error& e) {
      release();
      if (!e.retryable() || attempt >= options_.max_attempts) throw;
      spdlog::warn("{} (attempt {}/{}), retrying in {} ms", e.what(), attempt, options_.max_attempts,
                   backoff.count());
    } catch (...) {
      release();
      throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

std::optional<std::string> Gateway::read_disk_cache(const std::string& key) const {
  if (!options_.cache_dir) return std::nullopt;
  std::ifstream in(*options_.cache_dir / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    return json::parse(in).at("text").get<std::string>();
  } catch (const json::exception&) {
    spdlog::warn("ignoring corrupt cache entry {}", key);
    return std::nullopt;
  }
}

void Gateway::write_disk_cache(const std::string& key, const CompletionRequest& request, const std::string& text) const {
  if (!options_.cache_dir) return;
  const auto final_path = *options_.cache_dir / (key + ".json");
  const auto tmp_path = *options_.cache_dir / (key + ".json.tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  json entry{{"model_id", request.model_id},
             {"prompt_hash", request.prompt_hash()},
             {"temperature", request.temperature ? json(*request.temperature) : json(nullptr)},
             {"sample_tag", request.sample_tag},
             {"text", text}};
  {
    std::ofstream out(tmp_path);
    out << entry.dump();
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) spdlog::warn("could not persist cache entry {}: {}", key, ec.message());
}

std::vector<CompletionOutcome> Gateway::complete_many(const std::vector<CompletionRequest>& requests,
                                                      std::size_t max_in_flight) {
  if (max_in_flight == 0) throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
  std::vector<CompletionOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i].result = complete(requests[i]);
      } catch (const Error& e) {
        outcomes[i].error = e;
      } catch (const std::exception& e) {
        outcomes[i].error = Error(ErrorCode::kInvalidArgument, e.what());
      }
    }
  };
  const std::size_t workers = std::min(max_in_flight, requests.size());
  if (workers <= 1) {
    worker();
    return outcomes;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return outcomes;
}

Ledger Gateway::ledger() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

std::vector<std::string> Gateway::call_log() const {
  std::lock_guard lock(mutex_);
  return call_log_;
}

std::size_t Gateway::call_log_size() const {
  std::lock_guard lock(mutex_);
  return call_log_.size();
}

}  // namespace tick
