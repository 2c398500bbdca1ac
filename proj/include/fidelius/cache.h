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

#ifndef FIDELIUS_CACHE_H_
#define FIDELIUS_CACHE_H_

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "fidelius/backend.h"

namespace fidelius {

// Greedy requests are always cacheable; sampled ones only when the caller
// numbers them with a sample_index.
bool IsCacheable(const CompletionRequest& request);

// SHA-256 hex digest over backend id, model, prompt bytes, temperature,
// top_p, mode, sample_index and the logprob request.
std::string CacheKey(const Backend& backend, const CompletionRequest& request);

// Persistent response cache. One JSON file per entry, named by key, plus an
// append-only manifest.jsonl. Entries are written to a temporary file and
// renamed into place, so concurrent readers never observe partial entries.
// Unreadable entries are skipped with a warning and refetched.
class CachedBackend : public Backend {
 public:
  CachedBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir);

  CompletionResult Complete(const CompletionRequest& request) override;

  std::string id() const override { return inner_->id(); }
  std::string model() const override { return inner_->model(); }
  bool supports_label_logprobs() const override {
    return inner_->supports_label_logprobs();
  }
  bool wants_prompt_trailer() const override { return inner_->wants_prompt_trailer(); }

  const std::filesystem::path& dir() const { return dir_; }
  long hits() const { return hits_; }
  long misses() const { return misses_; }

 private:
  std::optional<CompletionResult> Lookup(const std::string& key) const;
  void Store(const std::string& key, const CompletionRequest& request,
             const CompletionResult& result);

  std::shared_ptr<Backend> inner_;
  std::filesystem::path dir_;
  std::mutex manifest_mu_;
  std::atomic<long> hits_{0};
  std::atomic<long> misses_{0};
  std::atomic<long> tmp_counter_{0};
};

std::shared_ptr<Backend> Cached(std::shared_ptr<Backend> inner,
                                const std::filesystem::path& dir);

}  // namespace fidelius

#endif  // FIDELIUS_CACHE_H_
