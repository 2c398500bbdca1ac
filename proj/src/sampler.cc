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

#include "fidelius/sampler.h"

#include <cctype>
#include <vector>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/log.h"
#include "fidelius/prompt.h"

namespace fidelius {
namespace {

bool IsTokenChar(char c) { return std::isalnum(static_cast<unsigned char>(c)); }

const std::string* Match(std::string_view token, std::span<const std::string> allowed) {
  for (const auto& label : allowed) {
    if (label.size() != token.size()) continue;
    bool same = true;
    for (size_t i = 0; i < token.size() && same; ++i) {
      same = std::toupper(static_cast<unsigned char>(token[i])) ==
             std::toupper(static_cast<unsigned char>(label[i]));
    }
    if (same) return &label;
  }
  return nullptr;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

AnswerDistribution MakeDistribution(std::string item_id,
                                    const std::map<std::string, int>& counts) {
  AnswerDistribution dist;
  dist.item_id = std::move(item_id);
  for (const auto& [label, n] : counts) {
    if (n < 0) throw ValidationError("negative answer count");
    if (n == 0) continue;
    dist.counts[label] = n;
    dist.k += n;
  }
  for (const auto& [label, n] : dist.counts) {
    dist.probs[label] = static_cast<double>(n) / dist.k;
  }
  return dist;
}

AnswerDistribution SampleAnswers(const McqaItem& item, Backend& backend, int k,
                                 const DecodeParams& params) {
  if (k < 1) throw ValidationError(fmt::format("K must be >= 1, got {}", k));
  if (params.mode != DecodeMode::kSample) {
    throw ValidationError("answer sampling requires sample mode");
  }
  const std::vector<std::string> labels = item.labels();
  CompletionRequest request;
  request.prompt = RenderPrompt(PromptTemplate::kAnswer, item,
                                backend.wants_prompt_trailer());
  request.params = params;

  std::map<std::string, int> counts;
  int dropped = 0;
  for (int slot = 0; slot < k; ++slot) {
    bool parsed = false;
    for (int attempt = 0; attempt <= kMaxRedraws && !parsed; ++attempt) {
      request.sample_index = slot + attempt * k;
      const CompletionResult result = backend.Complete(request);
      if (auto label = ParseLabel(result.text, labels)) {
        ++counts[*label];
        parsed = true;
      }
    }
    if (!parsed) ++dropped;
  }

  AnswerDistribution dist = MakeDistribution(item.id, counts);
  if (dropped == k) {
    dist.flags.emplace(flags::kUnusable);
    Warn(fmt::format("item '{}': no sampled completion parsed to a label", item.id));
  } else if (dropped > 0) {
    dist.flags.emplace(flags::kReducedK);
    Warn(fmt::format("item '{}': dropped {} unparseable samples, K={}", item.id,
                     dropped, dist.k));
  }
  return dist;
}

std::string FinalAnswer(const AnswerDistribution& dist) {
  if (dist.counts.empty()) {
    throw ValidationError(fmt::format("item '{}': empty answer distribution", dist.item_id));
  }
  // std::map iterates labels in ascending order, so the first maximum wins
  // ties.
  auto best = dist.counts.begin();
  for (auto it = dist.counts.begin(); it != dist.counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

std::optional<std::string> ParseLabel(std::string_view text,
                                      std::span<const std::string> allowed) {
  text = Trim(text);
  if (text.starts_with("Answer:")) text = Trim(text.substr(7));
  if (text.starts_with("(")) text.remove_prefix(1);

  std::vector<std::string_view> tokens;
  for (size_t i = 0; i < text.size();) {
    if (!IsTokenChar(text[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && IsTokenChar(text[j])) ++j;
    tokens.push_back(text.substr(i, j - i));
    i = j;
  }
  if (tokens.empty()) return std::nullopt;

  // "B. The moon" / "B) ..." echo the option line; trust the leading label.
  const std::string* first = Match(tokens.front(), allowed);
  if (first && tokens.size() > 1 && tokens.front().data() == text.data()) {
    const char next = text[tokens.front().size()];
    if (next == '.' || next == ')' || next == ':') return *first;
  }

  const std::string* found = nullptr;
  for (auto token : tokens) {
    const std::string* label = Match(token, allowed);
    if (!label) continue;
    if (found && *found != *label) return std::nullopt;
    found = label;
  }
  if (!found) return std::nullopt;
  return *found;
}

}  // namespace fidelius
