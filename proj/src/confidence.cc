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

#include "fidelius/confidence.h"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/core.h>

#include "fidelius/errors.h"

namespace fidelius {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodNames = {{
    {Method::kOurs, "ours"},
    {Method::kOursNoU, "ours-no-u"},
    {Method::kOursNoF, "ours-no-f"},
    {Method::kVerb, "verb"},
    {Method::kLing, "ling"},
    {Method::kSampled, "sampled"},
    {Method::kToken, "token"},
}};

}  // namespace

std::string_view MethodName(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "ours";
}

std::optional<Method> MethodFromName(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

bool IsOursVariant(Method method) {
  return method == Method::kOurs || method == Method::kOursNoU ||
         method == Method::kOursNoF;
}

ConfidenceRecord UnusableRecord(const McqaItem& item, Method method,
                                std::set<std::string, std::less<>> flags) {
  ConfidenceRecord record;
  record.item_id = item.id;
  record.method = method;
  record.flags = std::move(flags);
  record.flags.emplace(flags::kUnusable);
  return record;
}

double Uncertainty(const std::map<std::string, double>& probs, int option_count) {
  if (option_count < 2) {
    throw ValidationError(fmt::format("uncertainty needs M >= 2, got {}", option_count));
  }
  double entropy = 0.0;
  for (const auto& [label, p] : probs) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  const double u = entropy / std::log(static_cast<double>(option_count));
  return std::clamp(u, 0.0, 1.0);
}

double Uncertainty(const AnswerDistribution& dist, int option_count) {
  return Uncertainty(dist.probs, option_count);
}

std::map<std::string, double> Combine(double uncertainty, const FidelityScores& fidelity) {
  if (!(uncertainty >= 0.0 && uncertainty <= 1.0)) {
    throw ValidationError(fmt::format("uncertainty must be in [0, 1], got {}", uncertainty));
  }
  std::map<std::string, double> out;
  for (const auto& [label, f] : fidelity.per_answer) out[label] = (1.0 - uncertainty) * f;
  return out;
}

ItemTrace TraceItem(const McqaItem& item, Backend& backend, int k,
                    const DecodeParams& params, ChainMemo* memo) {
  ItemTrace trace;
  trace.dist = SampleAnswers(item, backend, k, params);
  if (trace.dist.usable()) trace.chains = ElicitChains(item, trace.dist, backend, memo);
  return trace;
}

ConfidenceRecord ScoreOurs(const McqaItem& item, const ItemTrace& trace, double tau,
                           Method variant) {
  if (!IsOursVariant(variant)) {
    throw ValidationError(fmt::format("'{}' is not a variant of ours", MethodName(variant)));
  }
  if (!trace.dist.usable()) return UnusableRecord(item, variant, trace.dist.flags);

  ConfidenceRecord record;
  record.item_id = item.id;
  record.method = variant;
  record.flags = trace.dist.flags;
  record.sample_counts = trace.dist.counts;
  record.chosen = FinalAnswer(trace.dist);
  record.correct = record.chosen == item.gold_label;

  const double u = Uncertainty(trace.dist, item.option_count());
  const FidelityScores fidelity = ScoreChains(item.id, trace.chains, tau);
  record.flags.insert(fidelity.flags.begin(), fidelity.flags.end());
  record.chains = fidelity.chains;

  switch (variant) {
    case Method::kOurs:
      record.uncertainty = u;
      record.per_answer = Combine(u, fidelity);
      break;
    case Method::kOursNoU:
      record.uncertainty = 0.0;
      record.per_answer = Combine(0.0, fidelity);
      break;
    default:  // kOursNoF: 1 - U for the chosen answer alone
      record.uncertainty = u;
      record.per_answer = {{record.chosen, 1.0 - u}};
      break;
  }
  auto it = record.per_answer.find(record.chosen);
  record.confidence = it == record.per_answer.end() ? 0.0 : it->second;

  // Majority and confidence argmax can disagree; the majority stays chosen.
  for (const auto& [label, c] : record.per_answer) {
    if (c > record.confidence) {
      record.flags.emplace(flags::kMismatch);
      break;
    }
  }
  if (record.flags.contains(flags::kUnusable)) {
    return UnusableRecord(item, variant, record.flags);
  }
  return record;
}

ConfidenceRecord RunOurs(const McqaItem& item, Backend& backend, int k, double tau,
                         const DecodeParams& params) {
  if (!(tau > 1.0)) throw ValidationError(fmt::format("tau must be > 1, got {}", tau));
  return ScoreOurs(item, TraceItem(item, backend, k, params), tau, Method::kOurs);
}

}  // namespace fidelius
