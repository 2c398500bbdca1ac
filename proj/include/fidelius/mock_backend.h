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

#ifndef FIDELIUS_MOCK_BACKEND_H_
#define FIDELIUS_MOCK_BACKEND_H_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fidelius/backend.h"
#include "fidelius/prompt.h"
#include "json.hpp"

namespace fidelius {

// Behaviour of the offline mock model.
//
// For each item the mock holds a positive preference weight per option
// label. Over the labels presented in a prompt its choice distribution is
// softmax(log w / T) with T = temperature + answer_noise, truncated to the
// top_p nucleus; greedy decoding takes the argmax (first presented label on
// ties). An option whose content is the sentinel gets weight
// sentinel_affinity * max(w) where the max runs over the presented labels
// at their original weights, the sentinel-bearing label included.
//
// Accuracy is implied by the weights: the mock is right on an item exactly
// when the gold label carries the largest weight.
struct MockModelSpec {
  std::map<std::string, std::map<std::string, double>> weights;
  double sentinel_affinity = 0.1;
  double answer_noise = 0.0;

  bool operator==(const MockModelSpec&) const = default;

  void Validate() const;
  static MockModelSpec FromJson(const nlohmann::json& json);
  nlohmann::ordered_json ToJson() const;
};

MockModelSpec LoadMockSpec(const std::filesystem::path& path);
void WriteMockSpec(const MockModelSpec& spec, const std::filesystem::path& path);

// What the mock reads off a prompt.
struct MockPromptView {
  PromptTemplate kind = PromptTemplate::kAnswer;
  std::string item_id;
  std::vector<std::string> labels;            // presented, in prompt order
  std::optional<std::string> sentinel_label;  // label showing the sentinel
};

// Throws BackendError (terminal) when the prompt carries no trailer.
MockPromptView ParseMockPrompt(std::string_view prompt);

using LabelWeights = std::vector<std::pair<std::string, double>>;

class MockBackend : public Backend {
 public:
  explicit MockBackend(MockModelSpec spec);

  CompletionResult Complete(const CompletionRequest& request) override;

  std::string id() const override { return "mock"; }
  // A fingerprint of the mock weights, so caches never mix different mocks.
  std::string model() const override { return model_; }
  bool supports_label_logprobs() const override { return true; }
  bool wants_prompt_trailer() const override { return true; }

  const MockModelSpec& spec() const { return spec_; }

  // Weights over the presented labels with the sentinel rule applied.
  LabelWeights EffectiveWeights(const MockPromptView& view) const;

  // The distribution a sampled completion is drawn from (presented order,
  // labels outside the nucleus carry probability 0).
  LabelWeights ChoiceDistribution(const MockPromptView& view,
                                  const DecodeParams& params) const;

  std::string GreedyChoice(const MockPromptView& view) const;

 private:
  MockModelSpec spec_;
  std::string model_;
};

std::shared_ptr<Backend> MockFromSpec(MockModelSpec spec);

}  // namespace fidelius

#endif  // FIDELIUS_MOCK_BACKEND_H_
