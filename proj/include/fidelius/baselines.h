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

#ifndef FIDELIUS_BASELINES_H_
#define FIDELIUS_BASELINES_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "fidelius/backend.h"
#include "fidelius/confidence.h"
#include "fidelius/dataset.h"
#include "fidelius/sampler.h"

namespace fidelius {

// A guess plus the confidence stated next to it.
struct StatedConfidence {
  std::string label;
  double confidence = 0.0;
  std::set<std::string, std::less<>> flags;
};

// Parses a "Probability:" value: a decimal literal, optionally with a
// percent sign (divided by 100, flagged `percent`). Values outside [0, 1]
// are clamped and flagged `clamped`.
std::optional<StatedConfidence> ParseProbability(std::string_view text);

// "Guess: <label>" / "Probability: <p>" output of the Verb prompt. Without
// a Guess line the first other nonempty line is read as the guess.
std::optional<StatedConfidence> ParseVerbOutput(std::string_view text,
                                                std::span<const std::string> labels);

// "Guess: <label>" / "Confidence: <expression>" output of the Ling prompt.
std::optional<StatedConfidence> ParseLingOutput(std::string_view text,
                                                std::span<const std::string> labels);

// softmax(logit / t) over the given labels. Throws unless t > 0.
std::map<std::string, double> TemperatureSoftmax(const std::map<std::string, double>& logits,
                                                 double t);

// Single greedy query each; a reply that does not parse is retried once,
// then the record is unusable. params.temperature is recorded, the decode
// itself is greedy.
ConfidenceRecord RunVerb(const McqaItem& item, Backend& backend, DecodeParams params);
ConfidenceRecord RunLing(const McqaItem& item, Backend& backend, DecodeParams params);

// Confidence = sampled frequency of the majority answer.
ConfidenceRecord RunSampled(const McqaItem& item, const AnswerDistribution& dist);
ConfidenceRecord RunSampled(const McqaItem& item, Backend& backend, int k,
                            const DecodeParams& params);

// One greedy query for label logprobs, then softmax at temperature t.
// Throws BackendError (kCapability) if the backend has no logprobs.
ConfidenceRecord RunToken(const McqaItem& item, Backend& backend, double t);

}  // namespace fidelius

#endif  // FIDELIUS_BASELINES_H_
