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

#ifndef FIDELIUS_SAMPLER_H_
#define FIDELIUS_SAMPLER_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "fidelius/backend.h"
#include "fidelius/dataset.h"

namespace fidelius {

inline constexpr int kDefaultSamples = 10;
// Extra draws per slot when a completion does not parse to a label.
inline constexpr int kMaxRedraws = 3;

// Warning tags attached to records.
namespace flags {
inline constexpr std::string_view kUnusable = "unusable";
inline constexpr std::string_view kReducedK = "reduced_k";
inline constexpr std::string_view kChainTruncated = "chain_truncated";
inline constexpr std::string_view kClamped = "clamped";
inline constexpr std::string_view kPercent = "percent";
inline constexpr std::string_view kLogprobTruncated = "logprob_truncated";
inline constexpr std::string_view kMismatch = "majority_vs_confidence_mismatch";
}  // namespace flags

// Sampled answer frequencies for one item. k is the effective sample count
// (slots that never parsed are dropped).
struct AnswerDistribution {
  std::string item_id;
  std::map<std::string, int> counts;
  int k = 0;
  std::map<std::string, double> probs;
  std::set<std::string, std::less<>> flags;

  bool operator==(const AnswerDistribution&) const = default;

  bool usable() const { return k > 0; }
};

// Builds probs = counts / sum(counts). Zero counts are dropped.
AnswerDistribution MakeDistribution(std::string item_id,
                                    const std::map<std::string, int>& counts);

// Draws k answers with the answer prompt. Slot i uses sample_index i; a
// slot that does not parse is redrawn up to kMaxRedraws times (indices
// i + k, i + 2k, ...) and dropped if it still fails. BackendError
// propagates.
AnswerDistribution SampleAnswers(const McqaItem& item, Backend& backend, int k,
                                 const DecodeParams& params);

// Most frequent label; ties go to the lexicographically smallest label.
std::string FinalAnswer(const AnswerDistribution& dist);

// Reads an option label out of raw model output. Whitespace and a leading
// "Answer:" are stripped. Output that opens with a label followed by
// punctuation ("B." / "B)" / "(B)") yields that label; otherwise exactly
// one distinct allowed label must occur among the alphanumeric tokens.
// Matching is case-insensitive; the allowed spelling is returned.
std::optional<std::string> ParseLabel(std::string_view text,
                                      std::span<const std::string> allowed);

}  // namespace fidelius

#endif  // FIDELIUS_SAMPLER_H_
