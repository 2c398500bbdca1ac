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

#include "fidelius/fidelity.h"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/log.h"
#include "fidelius/prompt.h"

namespace fidelius {

FidelityChain ElicitChain(const McqaItem& item, std::string_view start,
                          Backend& backend) {
  if (!item.has_label(start)) {
    throw ValidationError(
        fmt::format("item '{}': chain start '{}' is not an option", item.id, start));
  }
  FidelityChain chain;
  chain.item_id = item.id;
  chain.start = std::string(start);
  chain.elements.push_back(chain.start);

  McqaItem working = ReplaceOptionContent(item, start, kSentinel);
  const bool trailer = backend.wants_prompt_trailer();
  while (working.option_count() > 1) {
    const std::vector<std::string> labels = working.labels();
    CompletionRequest request;
    request.prompt = RenderPrompt(PromptTemplate::kAnswer, working, trailer);
    request.params = DecodeParams::Greedy();

    std::optional<std::string> pick;
    for (int attempt = 0; attempt < 2 && !pick; ++attempt) {
      // The retry gets its own cache slot so a bad greedy reply is not
      // replayed.
      if (attempt > 0) request.sample_index = attempt;
      pick = ParseLabel(backend.Complete(request).text, labels);
    }
    if (!pick) {
      chain.truncated = true;
      Warn(fmt::format("item '{}': chain from '{}' truncated at length {}", item.id,
                       chain.start, chain.elements.size()));
      break;
    }
    if (*pick == chain.start) {
      chain.terminated_by_sentinel = true;
      break;
    }
    chain.elements.push_back(*pick);
    working = RemoveOption(working, *pick);
  }
  return chain;
}

std::map<std::string, double> ChainFidelity(const std::vector<std::string>& elements,
                                            double tau) {
  if (!(tau > 1.0) || !std::isfinite(tau)) {
    throw ValidationError(fmt::format("tau must be > 1, got {}", tau));
  }
  if (elements.empty()) throw ValidationError("empty fidelity chain");
  const size_t n = elements.size();
  std::vector<double> weights(n);
  double total = 0.0;
  for (size_t pos = 0; pos < n; ++pos) {
    // pos 0 is the leftmost element, i.e. i = n counted from the right.
    weights[pos] = std::pow(tau, static_cast<double>(n - pos));
    total += weights[pos];
  }
  std::map<std::string, double> out;
  for (size_t pos = 0; pos < n; ++pos) {
    if (!out.emplace(elements[pos], weights[pos] / total).second) {
      throw ValidationError(
          fmt::format("fidelity chain repeats label '{}'", elements[pos]));
    }
  }
  return out;
}

std::map<std::string, double> ChainFidelity(const FidelityChain& chain, double tau) {
  return ChainFidelity(chain.elements, tau);
}

std::vector<std::string> ElicitationOrder(const AnswerDistribution& dist) {
  std::vector<std::pair<std::string, int>> entries(dist.counts.begin(), dist.counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> order;
  for (const auto& [label, n] : entries) {
    if (n > 0) order.push_back(label);
  }
  return order;
}

std::optional<FidelityChain> ChainMemo::Find(const std::string& item_id,
                                             const std::string& start) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = chains_.find({item_id, start});
  if (it == chains_.end()) return std::nullopt;
  return it->second;
}

void ChainMemo::Insert(const FidelityChain& chain) {
  std::lock_guard<std::mutex> lock(mu_);
  chains_.insert_or_assign({chain.item_id, chain.start}, chain);
}

size_t ChainMemo::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return chains_.size();
}

std::vector<WeightedChain> ElicitChains(const McqaItem& item,
                                        const AnswerDistribution& dist,
                                        Backend& backend, ChainMemo* memo) {
  if (!dist.usable()) {
    throw ValidationError(fmt::format("item '{}': no sampled answers", item.id));
  }
  std::vector<WeightedChain> chains;
  for (const auto& start : ElicitationOrder(dist)) {
    std::optional<FidelityChain> chain;
    if (memo) chain = memo->Find(item.id, start);
    if (!chain) {
      chain = ElicitChain(item, start, backend);
      if (memo) memo->Insert(*chain);
    }
    chains.push_back({std::move(*chain), dist.probs.at(start)});
  }
  return chains;
}

FidelityScores ScoreChains(std::string item_id, std::vector<WeightedChain> chains,
                           double tau) {
  FidelityScores scores;
  scores.item_id = std::move(item_id);
  bool all_truncated = !chains.empty();
  for (const auto& [chain, weight] : chains) {
    all_truncated = all_truncated && chain.truncated;
    if (chain.truncated) scores.flags.emplace(flags::kChainTruncated);
    for (const auto& [label, f] : ChainFidelity(chain, tau)) {
      scores.per_answer[label] += weight * f;
    }
  }
  if (all_truncated) scores.flags.emplace(flags::kUnusable);
  scores.chains = std::move(chains);
  return scores;
}

FidelityScores ComputeFidelityScores(const McqaItem& item,
                                     const AnswerDistribution& dist,
                                     Backend& backend, double tau) {
  if (!(tau > 1.0)) throw ValidationError(fmt::format("tau must be > 1, got {}", tau));
  return ScoreChains(item.id, ElicitChains(item, dist, backend), tau);
}

}  // namespace fidelius
