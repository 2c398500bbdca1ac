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

#include "fidelius/ling_table.h"

#include <array>
#include <cctype>
#include <cmath>

namespace fidelius {
namespace {

constexpr std::array<LingExpression, 19> kTable = {{
    {"Certain", 1.0},
    {"Almost Certain", 0.95},
    {"Highly Likely", 0.9},
    {"Very Good Chance", 0.8},
    {"We Believe", 0.75},
    {"Probably", 0.7},
    {"Probable", 0.7},
    {"Likely", 0.7},
    {"Better than Even", 0.6},
    {"About Even", 0.5},
    {"Probably Not", 0.25},
    {"We Doubt", 0.2},
    {"Unlikely", 0.2},
    {"Little Chance", 0.1},
    {"Chances are Slight", 0.1},
    {"Improbable", 0.1},
    {"Highly Unlikely", 0.05},
    {"Almost No Chance", 0.02},
    {"Impossible", 0.0},
}};

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::string_view Clean(std::string_view s) {
  auto strip = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '"' ||
           c == '\'' || c == '`';
  };
  while (!s.empty() && strip(s.front())) s.remove_prefix(1);
  while (!s.empty() && (strip(s.back()) || s.back() == '.')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::span<const LingExpression> LingExpressionTable() { return kTable; }

std::optional<double> LookupLingExpression(std::string_view phrase) {
  phrase = Clean(phrase);
  for (const auto& entry : kTable) {
    if (EqualsIgnoreCase(entry.phrase, phrase)) return entry.score;
  }
  return std::nullopt;
}

std::string RenderExpressionList() {
  std::string out;
  for (const auto& entry : kTable) {
    if (!out.empty()) out += ", ";
    out += entry.phrase;
  }
  return out;
}

std::string_view NearestLingExpression(double p) {
  const LingExpression* best = &kTable.front();
  for (const auto& entry : kTable) {
    if (std::abs(entry.score - p) < std::abs(best->score - p)) best = &entry;
  }
  return best->phrase;
}

}  // namespace fidelius
