#include "tick/backends.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "tick/text_util.hpp"

namespace tick {

using json = nlohmann::json;

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) : rules_(std::move(rules)) {
  for (const auto& rule : rules_) {
    if (rule.responses.empty()) throw Error(ErrorCode::kInvalidArgument, "script rule without responses");
  }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& script) {
  std::vector<ScriptRule> rules;
  try {
    for (const auto& jr : script.at("rules")) {
      ScriptRule rule;
      if (jr.contains("prompt_sha256")) rule.prompt_sha256 = jr.at("prompt_sha256").get<std::string>();
      if (jr.contains("contains")) {
        const auto& c = jr.at("contains");
        rule.contains = c.is_string() ? std::vector<std::string>{c.get<std::string>()} : c.get<std::vector<std::string>>();
      }
      rule.responses = jr.at("responses").get<std::vector<std::string>>();
      rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed script: ") + e.what());
  }
  return std::make_shared<ScriptedBackend>(std::move(rules));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open script " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, "script " + path.string() + ": " + e.what());
  }
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
  ++invocations_;
  const auto pick = [&](const ScriptRule& rule) {
    return rule.responses[std::min<std::size_t>(request.sample_tag, rule.responses.size() - 1)];
  };
  const auto contains_all = [&](const ScriptRule& rule) {
    return std::all_of(rule.contains.begin(), rule.contains.end(),
                       [&](const std::string& s) { return request.prompt.find(s) != std::string::npos; });
  };
  const std::string hash = request.prompt_hash();
  for (const auto& rule : rules_) {
    if (rule.prompt_sha256 && *rule.prompt_sha256 == hash && contains_all(rule)) return pick(rule);
  }
  for (const auto& rule : rules_) {
    if (!rule.prompt_sha256 && contains_all(rule)) return pick(rule);
  }
  throw Error(ErrorCode::kNoMatch, "no scripted response for prompt " + hash.substr(0, 12) + " (" +
                                       std::to_string(request.prompt.size()) + " chars)");
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, std::filesystem::path transcript)
    : inner_(std::move(inner)), transcript_(std::move(transcript)) {}

std::string RecordingBackend::complete(const CompletionRequest& request) {
  std::string text = inner_->complete(request);
  json record{{"model_id", request.model_id},
              {"prompt", request.prompt},
              {"temperature", request.temperature ? json(*request.temperature) : json(nullptr)},
              {"sample_tag", request.sample_tag},
              {"text", text}};
  std::lock_guard lock(mutex_);
  std::ofstream out(transcript_, std::ios::app);
  out << record.dump() << '\n';
  if (!out) throw Error(ErrorCode::kWriteFailure, "cannot append to transcript " + transcript_.string());
  return text;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open transcript " + transcript.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      CompletionRequest req;
      req.model_id = j.at("model_id").get<std::string>();
      req.prompt = j.at("prompt").get<std::string>();
      if (!j.at("temperature").is_null()) req.temperature = j.at("temperature").get<double>();
      req.sample_tag = j.at("sample_tag").get<std::uint32_t>();
      responses_[req.cache_key()] = j.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, std::string("transcript: ") + e.what(), line_no);
    }
  }
}

std::string ReplayBackend::complete(const CompletionRequest& request) {
  auto it = responses_.find(request.cache_key());
  if (it == responses_.end()) throw Error(ErrorCode::kNoMatch, "request not present in transcript");
  return it->second;
}

std::vector<ProviderConfig> parse_providers(const json& j) {
  std::vector<ProviderConfig> out;
  try {
    for (const auto& jp : j.at("providers")) {
      ProviderConfig p;
      p.name = jp.at("name").get<std::string>();
      p.endpoint = jp.at("endpoint").get<std::string>();
      p.token_env = jp.value("token_env", "");
      p.models = jp.at("models").get<std::map<std::string, std::string>>();
      p.timeout_seconds = jp.value("timeout_seconds", 120);
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("providers: ") + e.what());
  }
  return out;
}

HttpChatBackend::HttpChatBackend(ProviderConfig provider, std::string provider_model)
    : provider_(std::move(provider)), provider_model_(std::move(provider_model)) {
  const auto scheme_end = provider_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint without scheme: " + provider_.endpoint);
  }
  const auto path_start = provider_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = provider_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : provider_.endpoint.substr(path_start);
}

std::string HttpChatBackend::complete(const CompletionRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(10);
  client.set_read_timeout(provider_.timeout_seconds);
  httplib::Headers headers;
  if (!provider_.token_env.empty()) {
    if (const char* token = std::getenv(provider_.token_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  json body{{"model", provider_model_},
            {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
            {"max_tokens", request.max_tokens}};
  if (request.temperature) body["temperature"] = *request.temperature;

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnreachable,
                provider_.name + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::kProviderUnreachable, provider_.name + ": HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kInvalidArgument,
                provider_.name + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  try {
    return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, provider_.name + ": unexpected response body: " + e.what());
  }
}

void register_providers(Gateway& gateway, const std::vector<ProviderConfig>& providers) {
  for (const auto& p : providers) {
    for (const auto& [suffix, provider_model] : p.models) {
      gateway.register_backend(p.name + "/" + suffix, std::make_shared<HttpChatBackend>(p, provider_model));
    }
  }
}

}  // namespace tick
