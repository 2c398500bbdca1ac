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

#ifndef FIDELIUS_HTTP_BACKEND_H_
#define FIDELIUS_HTTP_BACKEND_H_

#include <chrono>
#include <functional>
#include <string>

#include "fidelius/backend.h"
#include "json.hpp"

namespace fidelius {

inline constexpr const char* kApiKeyEnv = "FIDELIUS_API_KEY";

struct HttpBackendConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model;
  std::string api_key;
  int max_tokens = 32;
  int top_logprobs = 20;
  bool supports_logprobs = true;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{60};
};

// Reads FIDELIUS_API_KEY; empty when unset.
std::string ApiKeyFromEnv();

// Body for POST {base_url}/chat/completions. Greedy requests are sent with
// temperature 0 and top_p 1.
nlohmann::ordered_json BuildChatRequest(const HttpBackendConfig& config,
                                        const CompletionRequest& request);

// Extracts the completion text and, when requested, per-label logprobs from
// a chat-completions response. Labels missing from the returned top
// alternatives are dropped, the rest renormalized, and the result marked
// logprob_truncated. Throws BackendError: kTerminal for malformed bodies,
// kCapability when logprobs were requested but not returned.
CompletionResult ParseChatResponse(const nlohmann::json& body,
                                   const CompletionRequest& request);

// OpenAI-compatible chat-completions client. One request per completion.
// Transport failures and 5xx responses are retried with exponential
// backoff; 4xx responses are terminal.
class HttpBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpBackendConfig config, Sleeper sleeper = {});

  CompletionResult Complete(const CompletionRequest& request) override;

  std::string id() const override { return "http:" + config_.base_url; }
  std::string model() const override { return config_.model; }
  bool supports_label_logprobs() const override { return config_.supports_logprobs; }

 private:
  HttpBackendConfig config_;
  Sleeper sleeper_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path prefix + "/chat/completions"
};

}  // namespace fidelius

#endif  // FIDELIUS_HTTP_BACKEND_H_
