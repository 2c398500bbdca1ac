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
#ifndef FIDELIUS_BACKEND_H_
#define FIDELIUS_BACKEND_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fidelius {

enum class DecodeMode { kSample, kGreedy };

std::string_view DecodeModeName(DecodeMode mode);

struct DecodeParams {
  double temperature = 1.0;
  double top_p = 1.0;
  DecodeMode mode = DecodeMode::kSample;
  std::optional<std::uint64_t> seed;  // honoured by the mock only

  bool operator==(const DecodeParams&) const = default;

  // Canonical greedy settings. Requests built from these share cache keys
  // regardless of the run temperature.
  static DecodeParams Greedy();

  // Throws ValidationError: temperature >= 0, top_p in (0, 1], and
  // temperature > 0 when sampling.
  void Validate() const;
};

struct CompletionRequest {
  std::string prompt;
  DecodeParams params;
  bool want_label_logprobs = false;
  std::vector<std::string> allowed_labels;
  // Distinguishes repeated draws of the same prompt. Sampled requests are
  // only cacheable when this is set.
  std::optional<int> sample_index;

  void Validate() const;
};

struct CompletionResult {
  std::string text;
  // Natural-log probabilities keyed by label; keys are a subset of the
  // request's allowed_labels.
  std::optional<std::map<std::string, double>> label_logprobs;
  // Some allowed labels were missing from the provider's top alternatives.
  bool logprob_truncated = false;
  std::string backend_id;
  bool cached = false;
};

// A language model. Implementations must accept concurrent Complete()
// calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual CompletionResult Complete(const CompletionRequest& request) = 0;

  virtual std::string id() const = 0;
  virtual std::string model() const { return {}; }
  virtual bool supports_label_logprobs() const { return false; }

  // True when prompts must carry the machine-readable item trailer.
  virtual bool wants_prompt_trailer() const { return false; }
};

}  // namespace fidelius

#endif  // FIDELIUS_BACKEND_H_
