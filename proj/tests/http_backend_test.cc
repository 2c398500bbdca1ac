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

#include <stdlib.h>

#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "fidelius/errors.h"
#include "httplib.h"
#include "json.hpp"

namespace fidelius {
namespace {

using Kind = BackendError::Kind;

struct Seen {
  std::string path;
  std::string auth;
  nlohmann::json body;
};

class FakeServer {
 public:
  using Handler = std::function<void(int call, const nlohmann::json& body, httplib::Response&)>;

  explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
      int call;
      nlohmann::json body = nlohmann::json::parse(req.body);
      {
        std::lock_guard<std::mutex> lock(mu_);
        seen_.push_back({req.path, req.get_header_value("Authorization"), body});
        call = static_cast<int>(seen_.size());
      }
      handler_(call, body, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& prefix = "/v1") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

  std::vector<Seen> seen() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<Seen> seen_;
};

nlohmann::json ChatBody(const std::string& content, nlohmann::json logprobs = nullptr) {
  nlohmann::json choice = {{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", content}}}};
  if (!logprobs.is_null()) choice["logprobs"] = {{"content", logprobs}};
  return {{"choices", nlohmann::json::array({choice})}};
}

void Reply(httplib::Response& res, const nlohmann::json& body) {
  res.set_content(body.dump(), "application/json");
}

struct Recorder {
  std::vector<long> waits;
  HttpBackend::Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { waits.push_back(d.count()); };
  }
};

HttpBackendConfig Config(const std::string& url) {
  HttpBackendConfig config;
  config.base_url = url;
  config.model = "test-model";
  config.api_key = "sk-test";
  config.timeout = std::chrono::seconds(5);
  return config;
}

CompletionRequest Ask(DecodeMode mode = DecodeMode::kSample) {
  CompletionRequest request;
  request.prompt = "pick one";
  request.params.mode = mode;
  request.params.temperature = 0.7;
  request.params.top_p = 0.9;
  return request;
}

TEST(HttpBackendTest, PostsChatCompletion) {
  FakeServer server([](int, const nlohmann::json&, httplib::Response& res) {
    Reply(res, ChatBody("B"));
  });
  Recorder rec;
  HttpBackend backend(Config(server.url()), rec.sleeper());
  const CompletionResult result = backend.Complete(Ask());
  EXPECT_EQ(result.text, "B");
  EXPECT_FALSE(result.label_logprobs.has_value());
  const auto seen = server.seen();
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0].path, "/v1/chat/completions");
  EXPECT_EQ(seen[0].auth, "Bearer sk-test");
  EXPECT_EQ(seen[0].body["model"], "test-model");
  EXPECT_EQ(seen[0].body["messages"].size(), 1u);
  EXPECT_EQ(seen[0].body["messages"][0]["role"], "user");
  EXPECT_EQ(seen[0].body["messages"][0]["content"], "pick one");
  EXPECT_DOUBLE_EQ(seen[0].body["temperature"].get<double>(), 0.7);
  EXPECT_DOUBLE_EQ(seen[0].body["top_p"].get<double>(), 0.9);
  EXPECT_EQ(seen[0].body["max_tokens"], 32);
  EXPECT_FALSE(seen[0].body.contains("logprobs"));
  EXPECT_TRUE(rec.waits.empty());
}

TEST(HttpBackendTest, GreedySendsZeroTemperature) {
  FakeServer server([](int, const nlohmann::json&, httplib::Response& res) {
    Reply(res, ChatBody("A"));
  });
  HttpBackend backend(Config(server.url()));
  backend.Complete(Ask(DecodeMode::kGreedy));
  EXPECT_DOUBLE_EQ(server.seen()[0].body["temperature"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(server.seen()[0].body["top_p"].get<double>(), 1.0);
}

TEST(HttpBackendTest, RetriesServerErrorsWithBackoff) {
  FakeServer server([](int call, const nlohmann::json&, httplib::Response& res) {
    if (call <= 2) {
      res.status = 503;
      return;
    }
    Reply(res, ChatBody("C"));
  });
  Recorder rec;
  HttpBackend backend(Config(server.url()), rec.sleeper());
  EXPECT_EQ(backend.Complete(Ask()).text, "C");
  EXPECT_EQ(server.seen().size(), 3u);
  EXPECT_EQ(rec.waits, (std::vector<long>{500, 1000}));
}

TEST(HttpBackendTest, GivesUpAfterThreeRetries) {
  FakeServer server([](int, const nlohmann::json&, httplib::Response& res) { res.status = 500; });
  Recorder rec;
  HttpBackend backend(Config(server.url()), rec.sleeper());
  try {
    backend.Complete(Ask());
    FAIL() << "expected an error";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), Kind::kTransport);
    EXPECT_TRUE(e.retryable());
    EXPECT_EQ(e.attempts(), 4);
  }
  EXPECT_EQ(server.seen().size(), 4u);
  EXPECT_EQ(rec.waits, (std::vector<long>{500, 1000, 2000}));
}

TEST(HttpBackendTest, ClientErrorsAreTerminal) {
  FakeServer server([](int, const nlohmann::json&, httplib::Response& res) {
    res.status = 401;
    res.set_content(R"({"error":"bad key"})", "application/json");
  });
  Recorder rec;
  HttpBackend backend(Config(server.url()), rec.sleeper());
  try {
    backend.Complete(Ask());
    FAIL() << "expected an error";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), Kind::kTerminal);
    EXPECT_FALSE(e.retryable());
  }
  EXPECT_EQ(server.seen().size(), 1u);
  EXPECT_TRUE(rec.waits.empty());
}

TEST(HttpBackendTest, UnreachableHostIsTransportError) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  Recorder rec;
  HttpBackendConfig config = Config("http://127.0.0.1:" + std::to_string(port) + "/v1");
  config.max_retries = 1;
  HttpBackend backend(config, rec.sleeper());
  try {
    backend.Complete(Ask());
    FAIL() << "expected an error";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), Kind::kTransport);
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(HttpBackendTest, LabelLogprobsWithTruncation) {
  const nlohmann::json tokens = nlohmann::json::array(
      {{{"token", "Answer"}, {"logprob", -0.01}, {"top_logprobs", nlohmann::json::array()}},
       {{"token", " B"},
        {"logprob", -0.2},
        {"top_logprobs",
         {{{"token", " B"}, {"logprob", -0.2}},
          {{"token", " A"}, {"logprob", -1.9}},
          {{"token", "b"}, {"logprob", -4.0}},
          {{"token", " C"}, {"logprob", -3.0}}}}}});
  FakeServer server([&](int, const nlohmann::json&, httplib::Response& res) {
    Reply(res, ChatBody("Answer B", tokens));
  });
  HttpBackend backend(Config(server.url()));
  CompletionRequest request = Ask(DecodeMode::kGreedy);
  request.want_label_logprobs = true;
  request.allowed_labels = {"A", "B", "C", "D"};
  const CompletionResult result = backend.Complete(request);
  EXPECT_TRUE(server.seen()[0].body["logprobs"].get<bool>());
  EXPECT_EQ(server.seen()[0].body["top_logprobs"], 20);
  ASSERT_TRUE(result.label_logprobs.has_value());
  const auto& lp = *result.label_logprobs;
  EXPECT_EQ(lp.size(), 3u);
  EXPECT_FALSE(lp.count("D"));
  EXPECT_TRUE(result.logprob_truncated);
  const double mass = std::exp(-0.2) + std::exp(-1.9) + std::exp(-3.0);
  EXPECT_NEAR(std::exp(lp.at("B")), std::exp(-0.2) / mass, 1e-12);
  EXPECT_NEAR(std::exp(lp.at("A")), std::exp(-1.9) / mass, 1e-12);
}

TEST(HttpBackendTest, CapabilityErrors) {
  FakeServer server([](int, const nlohmann::json&, httplib::Response& res) {
    Reply(res, ChatBody("A"));
  });
  CompletionRequest request = Ask(DecodeMode::kGreedy);
  request.want_label_logprobs = true;
  request.allowed_labels = {"A", "B"};

  HttpBackend silent(Config(server.url()));
  try {
    silent.Complete(request);
    FAIL() << "expected an error";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), Kind::kCapability);
  }

  HttpBackendConfig config = Config(server.url());
  config.supports_logprobs = false;
  HttpBackend declared(config);
  const size_t before = server.seen().size();
  try {
    declared.Complete(request);
    FAIL() << "expected an error";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), Kind::kCapability);
  }
  EXPECT_EQ(server.seen().size(), before);
}

TEST(HttpBackendTest, MalformedBodyIsTerminal) {
  FakeServer server([](int, const nlohmann::json&, httplib::Response& res) {
    res.set_content(R"({"choices":[]})", "application/json");
  });
  HttpBackend backend(Config(server.url()));
  try {
    backend.Complete(Ask());
    FAIL() << "expected an error";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), Kind::kTerminal);
  }
}

TEST(HttpBackendTest, ApiKeyFromEnvironment) {
  setenv(kApiKeyEnv, "sk-env", 1);
  EXPECT_EQ(ApiKeyFromEnv(), "sk-env");
  unsetenv(kApiKeyEnv);
  EXPECT_EQ(ApiKeyFromEnv(), "");
}

TEST(HttpBackendTest, RejectsBadBaseUrl) {
  HttpBackendConfig config = Config("localhost:8080");
  EXPECT_THROW(HttpBackend backend(config), ConfigError);
}

}  // namespace
}  // namespace fidelius
