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
#ifndef FIDELIUS_LING_TABLE_H_
#define FIDELIUS_LING_TABLE_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace fidelius {

struct LingExpression {
  std::string_view phrase;
  double score;
};

// The 19 canonical confidence expressions, in presentation order.
std::span<const LingExpression> LingExpressionTable();

// Case-insensitive lookup of a canonical phrase. Surrounding whitespace,
// quotes and a trailing period are ignored.
std::optional<double> LookupLingExpression(std::string_view phrase);

// Phrases joined with ", " in table order, for the Ling prompt.
std::string RenderExpressionList();

// Phrase whose score is closest to p (first in table order on ties).
std::string_view NearestLingExpression(double p);

}  // namespace fidelius

#endif  // FIDELIUS_LING_TABLE_H_
