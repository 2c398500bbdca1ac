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

#include "fidelius/baselines.h"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/ling_table.h"
#include "fidelius/prompt.h"

namespace fidelius {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const size_t nl = text.find('\n');
    std::string_view line = Trim(text.substr(0, nl));
    if (!line.empty()) out.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

// Value after "<key>:" when the line starts with key (case-insensitive).
std::optional<std::string_view> KeyedValue(std::string_view line, std::string_view key) {
  if (line.size() <= key.size() || line[key.size()] != ':') return std::nullopt;
  for (size_t i = 0; i < key.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(line[i])) !=
        std::tolower(static_cast<unsigned char>(key[i]))) {
      return std::nullopt;
    }
  }
  return Trim(line.substr(key.size() + 1));
}

// Finds "<value_key>: ..." and the guess; parse_value turns the value into
// a confidence.
template <typename ParseValue>
std::optional<StatedConfidence> ParseStated(std::string_view text,
                                            std::span<const std::string> labels,
                                            std::string_view value_key,
                                            ParseValue parse_value) {
  std::optional<std::string_view> guess_line, fallback_line, value;
  for (auto line : Lines(text)) {
    if (auto v = KeyedValue(line, "Guess")) {
      if (!guess_line) guess_line = *v;
    } else if (auto v = KeyedValue(line, value_key)) {
      if (!value) value = *v;
    } else if (!fallback_line) {
      fallback_line = line;
    }
  }
  if (!value) return std::nullopt;
  auto guess_text = guess_line ? guess_line : fallback_line;
  if (!guess_text) return std::nullopt;
  auto label = ParseLabel(*guess_text, labels);
  if (!label) return std::nullopt;
  std::optional<StatedConfidence> stated = parse_value(*value);
  if (!stated) return std::nullopt;
  stated->label = *label;
  return stated;
}

using Parser = std::optional<StatedConfidence> (*)(std::string_view,
                                                   std::span<const std::string>);

ConfidenceRecord RunStated(const McqaItem& item, Backend& backend, DecodeParams params,
                           PromptTemplate kind, Method method, Parser parse) {
  params.mode = DecodeMode::kGreedy;
  const std::vector<std::string> labels = item.labels();
  CompletionRequest request;
  request.prompt = RenderPrompt(kind, item, backend.wants_prompt_trailer());
  request.params = params;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt > 0) request.sample_index = attempt;
    auto stated = parse(backend.Complete(request).text, labels);
    if (!stated) continue;
    ConfidenceRecord record;
    record.item_id = item.id;
    record.method = method;
    record.chosen = stated->label;
    record.confidence = stated->confidence;
    record.per_answer = {{stated->label, stated->confidence}};
    record.correct = stated->label == item.gold_label;
    record.flags = std::move(stated->flags);
    return record;
  }
  return UnusableRecord(item, method);
}

}  // namespace

std::optional<StatedConfidence> ParseProbability(std::string_view text) {
  text = Trim(text);
  if (text.empty()) return std::nullopt;
  StatedConfidence out;
  bool percent = false;
  if (text.back() == '%') {
    percent = true;
    text = Trim(text.substr(0, text.size() - 1));
  }
  const std::string buffer(text);
  char* end = nullptr;
  errno = 0;
  double value = std::strtod(buffer.c_str(), &end);
  // Trailing period from a sentence-style answer is tolerated.
  std::string_view rest(end, buffer.c_str() + buffer.size() - end);
  if (end == buffer.c_str() || errno == ERANGE || !std::isfinite(value) ||
      !(rest.empty() || rest == ".")) {
    return std::nullopt;
  }
  if (percent) {
    value /= 100.0;
    out.flags.emplace(flags::kPercent);
  }
  if (value < 0.0 || value > 1.0) {
    value = std::clamp(value, 0.0, 1.0);
    out.flags.emplace(flags::kClamped);
  }
  out.confidence = value;
  return out;
}

std::optional<StatedConfidence> ParseVerbOutput(std::string_view text,
                                                std::span<const std::string> labels) {
  return ParseStated(text, labels, "Probability", ParseProbability);
}

std::optional<StatedConfidence> ParseLingOutput(std::string_view text,
                                                std::span<const std::string> labels) {
  return ParseStated(text, labels, "Confidence",
                     [](std::string_view v) -> std::optional<StatedConfidence> {
                       auto score = LookupLingExpression(v);
                       if (!score) return std::nullopt;
                       StatedConfidence out;
                       out.confidence = *score;
                       return out;
                     });
}

std::map<std::string, double> TemperatureSoftmax(const std::map<std::string, double>& logits,
                                                 double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw ValidationError(fmt::format("softmax temperature must be > 0, got {}", t));
  }
  double max_logit = -INFINITY;
  for (const auto& [label, z] : logits) max_logit = std::max(max_logit, z);
  std::map<std::string, double> out;
  double total = 0.0;
  for (const auto& [label, z] : logits) {
    const double e = std::exp((z - max_logit) / t);
    out[label] = e;
    total += e;
  }
  for (auto& [label, p] : out) p /= total;
  return out;
}

ConfidenceRecord RunVerb(const McqaItem& item, Backend& backend, DecodeParams params) {
  return RunStated(item, backend, params, PromptTemplate::kVerb, Method::kVerb,
                   ParseVerbOutput);
}

ConfidenceRecord RunLing(const McqaItem& item, Backend& backend, DecodeParams params) {
  return RunStated(item, backend, params, PromptTemplate::kLing, Method::kLing,
                   ParseLingOutput);
}

ConfidenceRecord RunSampled(const McqaItem& item, const AnswerDistribution& dist) {
  if (!dist.usable()) return UnusableRecord(item, Method::kSampled, dist.flags);
  ConfidenceRecord record;
  record.item_id = item.id;
  record.method = Method::kSampled;
  record.chosen = FinalAnswer(dist);
  record.confidence = dist.probs.at(record.chosen);
  record.per_answer = dist.probs;
  record.correct = record.chosen == item.gold_label;
  record.flags = dist.flags;
  record.sample_counts = dist.counts;
  return record;
}

ConfidenceRecord RunSampled(const McqaItem& item, Backend& backend, int k,
                            const DecodeParams& params) {
  return RunSampled(item, SampleAnswers(item, backend, k, params));
}

ConfidenceRecord RunToken(const McqaItem& item, Backend& backend, double t) {
  if (!(t > 0.0)) throw ValidationError(fmt::format("temperature must be > 0, got {}", t));
  if (!backend.supports_label_logprobs()) {
    throw BackendError(BackendError::Kind::kCapability,
                       fmt::format("backend '{}' does not provide label logprobs",
                                   backend.id()));
  }
  CompletionRequest request;
  request.prompt = RenderPrompt(PromptTemplate::kAnswer, item, backend.wants_prompt_trailer());
  request.params = DecodeParams::Greedy();
  request.want_label_logprobs = true;
  request.allowed_labels = item.labels();
  const CompletionResult result = backend.Complete(request);
  if (!result.label_logprobs || result.label_logprobs->empty()) {
    throw BackendError(BackendError::Kind::kCapability,
                       fmt::format("backend '{}' returned no label logprobs", backend.id()));
  }

  ConfidenceRecord record;
  record.item_id = item.id;
  record.method = Method::kToken;
  record.per_answer = TemperatureSoftmax(*result.label_logprobs, t);
  // Argmax over the raw logits: exactly temperature-invariant, even where
  // a very flat softmax rounds neighbours to equal values.
  const auto& logits = *result.label_logprobs;
  auto best = logits.begin();
  for (auto it = logits.begin(); it != logits.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  record.chosen = best->first;
  record.confidence = record.per_answer.at(record.chosen);
  record.correct = record.chosen == item.gold_label;
  if (result.logprob_truncated) record.flags.emplace(flags::kLogprobTruncated);
  return record;
}

}  // namespace fidelius
