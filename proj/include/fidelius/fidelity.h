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

#ifndef FIDELIUS_FIDELITY_H_
#define FIDELIUS_FIDELITY_H_

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fidelius/backend.h"
#include "fidelius/dataset.h"
#include "fidelius/sampler.h"

namespace fidelius {

inline constexpr double kDefaultTau = 2.0;

// Labels a model moves through when its answer's content is replaced by the
// sentinel and every further pick is removed. elements[0] == start; the
// sentinel-bearing option keeps start's label throughout.
struct FidelityChain {
  std::string item_id;
  std::string start;
  std::vector<std::string> elements;
  bool terminated_by_sentinel = false;
  // A query failed to parse twice; the chain stops where it was.
  bool truncated = false;

  bool operator==(const FidelityChain&) const = default;
};

struct WeightedChain {
  FidelityChain chain;
  double weight = 0.0;

  bool operator==(const WeightedChain&) const = default;
};

struct FidelityScores {
  std::string item_id;
  std::map<std::string, double> per_answer;
  std::vector<WeightedChain> chains;
  std::set<std::string, std::less<>> flags;
};

// Runs the replacement protocol from `start` with greedy decoding:
// replace start's content with the sentinel, query, and until the model
// picks start's label again, append its pick and remove that option. Stops
// without the sentinel when only the sentinel-bearing option is left. Each
// step is one query; a parse failure is retried once before truncating.
FidelityChain ElicitChain(const McqaItem& item, std::string_view start,
                          Backend& backend);

// Element i from the right (rightmost i = 1) gets tau^i, normalized to sum
// to 1. Throws ValidationError unless tau > 1 and the chain is nonempty.
std::map<std::string, double> ChainFidelity(const std::vector<std::string>& elements,
                                            double tau);
std::map<std::string, double> ChainFidelity(const FidelityChain& chain, double tau);

// Distinct sampled answers by descending count, ties by label.
std::vector<std::string> ElicitationOrder(const AnswerDistribution& dist);

// Chains keyed by (item id, start). Elicitation is greedy, so a chain
// depends only on the item and its start and can be shared across runs at
// different sampling temperatures. Thread-safe.
class ChainMemo {
 public:
  std::optional<FidelityChain> Find(const std::string& item_id,
                                    const std::string& start) const;
  void Insert(const FidelityChain& chain);
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, FidelityChain> chains_;
};

// One chain per distinct sampled answer, weighted by its sampled frequency.
// With a memo, known chains are reused and new ones recorded.
std::vector<WeightedChain> ElicitChains(const McqaItem& item,
                                        const AnswerDistribution& dist,
                                        Backend& backend, ChainMemo* memo = nullptr);

// Weighted average of per-chain fidelities. Labels that only occur inside
// chains keep their score; labels in no chain are absent. Flags `unusable`
// when every chain is truncated.
FidelityScores ScoreChains(std::string item_id, std::vector<WeightedChain> chains,
                           double tau);

FidelityScores ComputeFidelityScores(const McqaItem& item,
                                     const AnswerDistribution& dist,
                                     Backend& backend, double tau);

}  // namespace fidelius

#endif  // FIDELIUS_FIDELITY_H_
