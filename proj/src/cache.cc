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

#include "fidelius/cache.h"

#include <unistd.h>

#include <fstream>
#include <system_error>

#include <fmt/core.h>
#include <openssl/evp.h>

#include "fidelius/errors.h"
#include "fidelius/log.h"
#include "fidelius/serialize.h"
#include "json.hpp"

namespace fidelius {
namespace {

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace

bool IsCacheable(const CompletionRequest& request) {
  return request.params.mode == DecodeMode::kGreedy ||
         request.sample_index.has_value();
}

std::string CacheKey(const Backend& backend, const CompletionRequest& request) {
  nlohmann::json fields = nlohmann::json::array();
  fields.push_back(backend.id());
  fields.push_back(backend.model());
  fields.push_back(request.prompt);
  fields.push_back(request.params.temperature);
  fields.push_back(request.params.top_p);
  fields.push_back(DecodeModeName(request.params.mode));
  fields.push_back(request.sample_index ? nlohmann::json(*request.sample_index)
                                        : nlohmann::json());
  fields.push_back(request.want_label_logprobs);
  fields.push_back(request.allowed_labels);
  return Sha256Hex(fields.dump());
}

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner,
                             std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw IoError(fmt::format("cannot create cache directory '{}': {}",
                              dir_.string(), ec.message()));
  }
}

CompletionResult CachedBackend::Complete(const CompletionRequest& request) {
  if (!IsCacheable(request)) return inner_->Complete(request);
  const std::string key = CacheKey(*inner_, request);
  if (auto hit = Lookup(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  CompletionResult result = inner_->Complete(request);
  Store(key, request, result);
  return result;
}

std::optional<CompletionResult> CachedBackend::Lookup(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto json = nlohmann::json::parse(ReadTextFile(path));
    if (json.at("key").get<std::string>() != key) throw Error("key mismatch");
    CompletionResult result;
    result.text = json.at("text").get<std::string>();
    result.backend_id = json.at("backend_id").get<std::string>();
    result.logprob_truncated = json.value("logprob_truncated", false);
    if (const auto& lp = json.at("label_logprobs"); !lp.is_null()) {
      result.label_logprobs = lp.get<std::map<std::string, double>>();
    }
    result.cached = true;
    return result;
  } catch (const std::exception& e) {
    Warn(fmt::format("ignoring corrupt cache entry '{}': {}", path.string(), e.what()));
    return std::nullopt;
  }
}

void CachedBackend::Store(const std::string& key, const CompletionRequest& request,
                          const CompletionResult& result) {
  nlohmann::ordered_json entry;
  entry["key"] = key;
  entry["backend_id"] = result.backend_id;
  entry["model"] = inner_->model();
  entry["mode"] = DecodeModeName(request.params.mode);
  entry["temperature"] = request.params.temperature;
  entry["top_p"] = request.params.top_p;
  entry["sample_index"] = request.sample_index ? nlohmann::ordered_json(*request.sample_index)
                                               : nlohmann::ordered_json();
  entry["prompt"] = request.prompt;
  entry["text"] = result.text;
  entry["label_logprobs"] = result.label_logprobs
                                ? nlohmann::ordered_json(*result.label_logprobs)
                                : nlohmann::ordered_json();
  entry["logprob_truncated"] = result.logprob_truncated;

  const auto final_path = dir_ / (key + ".json");
  const auto tmp_path =
      dir_ / fmt::format(".{}.{}.{}.tmp", key, ::getpid(), tmp_counter_++);
  try {
    WriteTextFile(tmp_path, entry.dump() + "\n");
    std::filesystem::rename(tmp_path, final_path);
  } catch (const std::exception& e) {
    std::error_code ec;
    std::filesystem::remove(tmp_path, ec);
    Warn(fmt::format("could not store cache entry {}: {}", key, e.what()));
    return;
  }

  nlohmann::ordered_json line;
  line["key"] = key;
  line["backend_id"] = result.backend_id;
  line["model"] = inner_->model();
  line["mode"] = DecodeModeName(request.params.mode);
  line["sample_index"] = entry["sample_index"];
  std::lock_guard<std::mutex> lock(manifest_mu_);
  std::ofstream manifest(dir_ / "manifest.jsonl", std::ios::app | std::ios::binary);
  manifest << line.dump() << '\n';
}

std::shared_ptr<Backend> Cached(std::shared_ptr<Backend> inner,
                                const std::filesystem::path& dir) {
  return std::make_shared<CachedBackend>(std::move(inner), dir);
}

}  // namespace fidelius
