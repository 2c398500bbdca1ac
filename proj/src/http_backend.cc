// Copyright 2026 The Fidelius Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fidelius/http_backend.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "httplib.h"

namespace fidelius {
namespace {

std::string NormalizeToken(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

bool SameLabel(std::string_view token, std::string_view label) {
  const std::string t = NormalizeToken(token);
  if (t.size() != label.size()) return false;
  for (size_t i = 0; i < t.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(t[i])) !=
        std::toupper(static_cast<unsigned char>(label[i]))) {
      return false;
    }
  }
  return true;
}

const std::string* MatchLabel(std::string_view token,
                              const std::vector<std::string>& allowed) {
  for (const auto& label : allowed) {
    if (SameLabel(token, label)) return &label;
  }
  return nullptr;
}

}  // namespace

std::string ApiKeyFromEnv() {
  const char* key = std::getenv(kApiKeyEnv);
  return key ? key : "";
}

nlohmann::ordered_json BuildChatRequest(const HttpBackendConfig& config,
                                        const CompletionRequest& request) {
  const bool greedy = request.params.mode == DecodeMode::kGreedy;
  nlohmann::ordered_json body;
  body["model"] = config.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = greedy ? 0.0 : request.params.temperature;
  body["top_p"] = greedy ? 1.0 : request.params.top_p;
  body["max_tokens"] = config.max_tokens;
  if (request.want_label_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = config.top_logprobs;
  }
  return body;
}

CompletionResult ParseChatResponse(const nlohmann::json& body,
                                   const CompletionRequest& request) {
  CompletionResult result;
  nlohmann::json choice;
  try {
    choice = body.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    result.text = content.is_null() ? "" : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::kTerminal,
                       fmt::format("malformed chat response: {}", e.what()));
  }
  if (!request.want_label_logprobs) return result;

  const auto lp = choice.find("logprobs");
  if (lp == choice.end() || lp->is_null() || !lp->contains("content") ||
      !(*lp)["content"].is_array() || (*lp)["content"].empty()) {
    throw BackendError(BackendError::Kind::kCapability,
                       "backend returned no token logprobs");
  }
  try {
    const auto& tokens = (*lp)["content"];
    // Score the first generated position that spells a label, e.g. the "B"
    // of "Answer: B"; fall back to the first position.
    const nlohmann::json* position = &tokens.at(0);
    for (const auto& t : tokens) {
      if (MatchLabel(t.at("token").get<std::string>(), request.allowed_labels)) {
        position = &t;
        break;
      }
    }
    std::map<std::string, double> logprobs;
    auto add = [&](const nlohmann::json& alt) {
      const std::string* label =
          MatchLabel(alt.at("token").get<std::string>(), request.allowed_labels);
      const double value = alt.at("logprob").get<double>();
      if (label && !logprobs.count(*label)) logprobs[*label] = value;
    };
    if (position->contains("top_logprobs")) {
      for (const auto& alt : position->at("top_logprobs")) add(alt);
    }
    add(*position);
    if (logprobs.empty()) {
      throw BackendError(BackendError::Kind::kTerminal,
                         "no allowed label among the returned logprobs");
    }
    double mass = 0.0;
    for (const auto& [label, value] : logprobs) mass += std::exp(value);
    for (auto& [label, value] : logprobs) value -= std::log(mass);
    result.logprob_truncated = logprobs.size() < request.allowed_labels.size();
    result.label_logprobs = std::move(logprobs);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::kTerminal,
                       fmt::format("malformed logprobs: {}", e.what()));
  }
  return result;
}

HttpBackend::HttpBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  const size_t scheme = config_.base_url.find("://");
  if (scheme == std::string::npos || config_.model.empty()) {
    throw ConfigError(fmt::format(
        "http backend: base_url must look like 'https://host/v1' and model must "
        "be set (base_url='{}')",
        config_.base_url));
  }
  const size_t slash = config_.base_url.find('/', scheme + 3);
  origin_ = config_.base_url.substr(0, slash);
  std::string prefix =
      slash == std::string::npos ? "" : config_.base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

CompletionResult HttpBackend::Complete(const CompletionRequest& request) {
  request.Validate();
  if (request.want_label_logprobs && !config_.supports_logprobs) {
    throw BackendError(BackendError::Kind::kCapability,
                       fmt::format("backend '{}' does not provide logprobs", id()));
  }
  const std::string body = BuildChatRequest(config_, request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  std::string last_error;
  const int max_attempts = 1 + std::max(0, config_.max_retries);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(config_.initial_backoff * (1 << (attempt - 2)));
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto response = client.Post(path_, headers, body, "application/json");
    if (!response) {
      last_error = httplib::to_string(response.error());
      continue;
    }
    if (response->status >= 500) {
      last_error = fmt::format("HTTP {}", response->status);
      continue;
    }
    if (response->status != 200) {
      throw BackendError(BackendError::Kind::kTerminal,
                         fmt::format("HTTP {} from {}: {}", response->status,
                                     origin_ + path_, response->body.substr(0, 300)),
                         attempt);
    }
    nlohmann::json parsed = nlohmann::json::parse(response->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw BackendError(BackendError::Kind::kTerminal,
                         "response body is not JSON", attempt);
    }
    CompletionResult result = ParseChatResponse(parsed, request);
    result.backend_id = id();
    return result;
  }
  throw BackendError(BackendError::Kind::kTransport,
                     fmt::format("{} failed after {} attempts: {}", origin_ + path_,
                                 max_attempts, last_error),
                     max_attempts);
}

}  // namespace fidelius
