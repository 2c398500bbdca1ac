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

#ifndef FIDELIUS_CONFIDENCE_H_
#define FIDELIUS_CONFIDENCE_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fidelius/backend.h"
#include "fidelius/dataset.h"
#include "fidelius/fidelity.h"
#include "fidelius/sampler.h"

namespace fidelius {

enum class Method { kOurs, kOursNoU, kOursNoF, kVerb, kLing, kSampled, kToken };

// "ours", "ours-no-u", "ours-no-f", "verb", "ling", "sampled", "token".
std::string_view MethodName(Method method);
std::optional<Method> MethodFromName(std::string_view name);
bool IsOursVariant(Method method);

struct ConfidenceRecord {
  std::string item_id;
  Method method = Method::kOurs;
  std::string chosen;
  double confidence = 0.0;  // of `chosen`
  std::map<std::string, double> per_answer;
  bool correct = false;
  std::optional<double> uncertainty;  // ours variants only
  std::set<std::string, std::less<>> flags;
  // Elicitation evidence, kept with the record for ours/sampled.
  std::map<std::string, int> sample_counts;
  std::vector<WeightedChain> chains;

  bool operator==(const ConfidenceRecord&) const = default;

  bool usable() const { return !flags.contains(flags::kUnusable); }
};

// Record for an item that produced no usable answer.
ConfidenceRecord UnusableRecord(const McqaItem& item, Method method,
                                std::set<std::string, std::less<>> flags = {});

// Entropy of the sampled distribution normalized by log(option_count), with
// 0 log 0 = 0. Throws ValidationError when option_count < 2.
double Uncertainty(const std::map<std::string, double>& probs, int option_count);
double Uncertainty(const AnswerDistribution& dist, int option_count);

// (1 - uncertainty) * F(label) for every label F scores. Values are not
// renormalized: they sum to 1 - uncertainty.
std::map<std::string, double> Combine(double uncertainty, const FidelityScores& fidelity);

// Everything the backend contributes to "ours" for one item. Scoring it is
// pure, so tau can be swept without new queries.
struct ItemTrace {
  AnswerDistribution dist;
  std::vector<WeightedChain> chains;
};

ItemTrace TraceItem(const McqaItem& item, Backend& backend, int k,
                    const DecodeParams& params, ChainMemo* memo = nullptr);

// Scores a trace as ours / ours-no-u / ours-no-f. The chosen answer is the
// sampling majority.
ConfidenceRecord ScoreOurs(const McqaItem& item, const ItemTrace& trace, double tau,
                           Method variant = Method::kOurs);

ConfidenceRecord RunOurs(const McqaItem& item, Backend& backend, int k, double tau,
                         const DecodeParams& params);

}  // namespace fidelius

#endif  // FIDELIUS_CONFIDENCE_H_
