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

#include "fidelius/mock_backend.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <fmt/core.h>

#include "fidelius/dataset.h"
#include "fidelius/errors.h"
#include "fidelius/ling_table.h"
#include "fidelius/serialize.h"

namespace fidelius {
namespace {

constexpr std::string_view kVerbPrefix = "Provide your best guess and the probability";
constexpr std::string_view kLingPrefix = "Provide your best guess for the following question";

class Fnv1a {
 public:
  void Add(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    Add64(bytes.size());
  }
  void Add64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xff;
      state_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform [0, 1) draw that is a pure function of the request.
double RequestUniform(const CompletionRequest& request) {
  Fnv1a h;
  h.Add(request.prompt);
  h.Add64(request.params.seed.value_or(0));
  h.Add64(static_cast<std::uint64_t>(request.sample_index.value_or(-1)));
  h.Add64(std::bit_cast<std::uint64_t>(request.params.temperature));
  h.Add64(std::bit_cast<std::uint64_t>(request.params.top_p));
  return static_cast<double>(SplitMix64(h.digest()) >> 11) * 0x1.0p-53;
}

double Require(const MockModelSpec& spec, const std::string& id,
               const std::string& label) {
  auto item = spec.weights.find(id);
  if (item == spec.weights.end()) {
    throw BackendError(BackendError::Kind::kTerminal,
                       fmt::format("mock: unknown item id '{}'", id));
  }
  auto w = item->second.find(label);
  if (w == item->second.end()) {
    throw BackendError(BackendError::Kind::kTerminal,
                       fmt::format("mock: item '{}' has no weight for label '{}'", id, label));
  }
  return w->second;
}

}  // namespace

void MockModelSpec::Validate() const {
  if (!(sentinel_affinity >= 0.0) || !std::isfinite(sentinel_affinity)) {
    throw ValidationError("mock: sentinel_affinity must be a finite value >= 0");
  }
  if (!(answer_noise >= 0.0) || !std::isfinite(answer_noise)) {
    throw ValidationError("mock: answer_noise must be >= 0");
  }
  for (const auto& [id, labels] : weights) {
    if (labels.empty()) {
      throw ValidationError(fmt::format("mock: item '{}' has no weights", id));
    }
    for (const auto& [label, w] : labels) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ValidationError(
            fmt::format("mock: weight for '{}'/'{}' must be positive", id, label));
      }
    }
  }
}

MockModelSpec MockModelSpec::FromJson(const nlohmann::json& json) {
  MockModelSpec spec;
  try {
    spec.sentinel_affinity = json.value("sentinel_affinity", spec.sentinel_affinity);
    spec.answer_noise = json.value("answer_noise", spec.answer_noise);
    for (const auto& [id, labels] : json.at("weights").items()) {
      auto& out = spec.weights[id];
      for (const auto& [label, w] : labels.items()) out[label] = w.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("mock spec: {}", e.what()));
  }
  spec.Validate();
  return spec;
}

nlohmann::ordered_json MockModelSpec::ToJson() const {
  nlohmann::ordered_json json;
  json["sentinel_affinity"] = sentinel_affinity;
  json["answer_noise"] = answer_noise;
  auto& out = json["weights"] = nlohmann::ordered_json::object();
  for (const auto& [id, labels] : weights) {
    auto& item = out[id] = nlohmann::ordered_json::object();
    for (const auto& [label, w] : labels) item[label] = w;
  }
  return json;
}

MockModelSpec LoadMockSpec(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return MockModelSpec::FromJson(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ParseError& e) {
    throw e.WithContext(path.string());
  }
}

void WriteMockSpec(const MockModelSpec& spec, const std::filesystem::path& path) {
  WriteTextFile(path, spec.ToJson().dump(1) + "\n");
}

MockPromptView ParseMockPrompt(std::string_view prompt) {
  auto trailer = ParseTrailer(prompt);
  if (!trailer) {
    throw BackendError(BackendError::Kind::kTerminal,
                       "mock: prompt has no #qid/#labels trailer");
  }
  MockPromptView view;
  view.item_id = std::move(trailer->item_id);
  view.labels = std::move(trailer->labels);
  if (prompt.starts_with(kVerbPrefix)) {
    view.kind = PromptTemplate::kVerb;
  } else if (prompt.starts_with(kLingPrefix)) {
    view.kind = PromptTemplate::kLing;
  }
  for (const auto& label : view.labels) {
    const std::string line = fmt::format("\n{}. {}\n", label, kSentinel);
    if (prompt.find(line) != std::string_view::npos) {
      view.sentinel_label = label;
      break;
    }
  }
  return view;
}

MockBackend::MockBackend(MockModelSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  Fnv1a h;
  h.Add(spec_.ToJson().dump());
  model_ = fmt::format("spec-{:016x}", h.digest());
}

LabelWeights MockBackend::EffectiveWeights(const MockPromptView& view) const {
  LabelWeights out;
  out.reserve(view.labels.size());
  double max_weight = 0.0;
  for (const auto& label : view.labels) {
    const double w = Require(spec_, view.item_id, label);
    max_weight = std::max(max_weight, w);
    out.emplace_back(label, w);
  }
  if (view.sentinel_label) {
    for (auto& [label, w] : out) {
      if (label == *view.sentinel_label) w = spec_.sentinel_affinity * max_weight;
    }
  }
  return out;
}

LabelWeights MockBackend::ChoiceDistribution(const MockPromptView& view,
                                             const DecodeParams& params) const {
  LabelWeights dist = EffectiveWeights(view);
  if (params.mode == DecodeMode::kGreedy) {
    const std::string best = GreedyChoice(view);
    for (auto& [label, p] : dist) p = label == best ? 1.0 : 0.0;
    return dist;
  }
  const double temperature = params.temperature + spec_.answer_noise;
  double max_logit = -INFINITY;
  for (auto& [label, w] : dist) {
    w = w > 0.0 ? std::log(w) / temperature : -INFINITY;
    max_logit = std::max(max_logit, w);
  }
  double total = 0.0;
  for (auto& [label, w] : dist) {
    w = std::exp(w - max_logit);
    total += w;
  }
  for (auto& [label, w] : dist) w /= total;

  if (params.top_p < 1.0) {
    std::vector<size_t> order(dist.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return dist[a].second > dist[b].second;
    });
    double mass = 0.0;
    size_t keep = 0;
    while (keep < order.size() && mass < params.top_p) mass += dist[order[keep++]].second;
    for (size_t i = keep; i < order.size(); ++i) dist[order[i]].second = 0.0;
    for (auto& [label, p] : dist) p /= mass;
  }
  return dist;
}

std::string MockBackend::GreedyChoice(const MockPromptView& view) const {
  const LabelWeights weights = EffectiveWeights(view);
  auto best = weights.begin();
  for (auto it = weights.begin(); it != weights.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

CompletionResult MockBackend::Complete(const CompletionRequest& request) {
  request.Validate();
  const MockPromptView view = ParseMockPrompt(request.prompt);

  std::string choice;
  if (request.params.mode == DecodeMode::kGreedy) {
    choice = GreedyChoice(view);
  } else {
    const LabelWeights dist = ChoiceDistribution(view, request.params);
    const double u = RequestUniform(request);
    double cumulative = 0.0;
    for (const auto& [label, p] : dist) {
      if (p <= 0.0) continue;
      choice = label;
      cumulative += p;
      if (u < cumulative) break;
    }
  }

  CompletionResult result;
  result.backend_id = id();
  switch (view.kind) {
    case PromptTemplate::kAnswer:
      result.text = choice;
      break;
    case PromptTemplate::kVerb:
    case PromptTemplate::kLing: {
      DecodeParams unit;
      unit.temperature = 1.0;
      double p = 0.0;
      for (const auto& [label, q] : ChoiceDistribution(view, unit)) {
        if (label == choice) p = q;
      }
      result.text = view.kind == PromptTemplate::kVerb
                        ? fmt::format("Guess: {}\nProbability: {:.2f}", choice, p)
                        : fmt::format("Guess: {}\nConfidence: {}", choice,
                                      NearestLingExpression(p));
      break;
    }
  }

  if (request.want_label_logprobs) {
    const LabelWeights weights = EffectiveWeights(view);
    double total = 0.0;
    for (const auto& [label, w] : weights) total += w;
    std::map<std::string, double> logprobs;
    for (const auto& [label, w] : weights) {
      if (std::find(request.allowed_labels.begin(), request.allowed_labels.end(),
                    label) != request.allowed_labels.end()) {
        logprobs[label] = std::log(w / total);
      }
    }
    result.label_logprobs = std::move(logprobs);
  }
  return result;
}

std::shared_ptr<Backend> MockFromSpec(MockModelSpec spec) {
  return std::make_shared<MockBackend>(std::move(spec));
}

}  // namespace fidelius
