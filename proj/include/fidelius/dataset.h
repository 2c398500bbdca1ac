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
#ifndef FIDELIUS_DATASET_H_
#define FIDELIUS_DATASET_H_

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fidelius {

// Replacement content used when probing an answer's fidelity. Prompts are
// cache keys, so this must stay byte-exact.
inline constexpr std::string_view kSentinel = "All other options are wrong.";

struct Option {
  std::string label;
  std::string content;

  bool operator==(const Option&) const = default;
};

// One multiple-choice question. Values are immutable in practice: every
// edit below returns a new item.
struct McqaItem {
  std::string id;
  std::string question;
  std::vector<Option> options;
  std::string gold_label;
  nlohmann::json meta;  // null or object, carried through untouched

  bool operator==(const McqaItem&) const = default;

  int option_count() const { return static_cast<int>(options.size()); }
  bool has_label(std::string_view label) const;
  const Option* find(std::string_view label) const;
  std::vector<std::string> labels() const;
};

struct QuestionSet {
  std::string name;
  std::vector<McqaItem> items;

  bool operator==(const QuestionSet&) const = default;
};

// Checks the item invariants: nonempty unique labels, at least two
// options, gold among the labels. Throws ValidationError naming the id.
void ValidateItem(const McqaItem& item);

McqaItem ReplaceOptionContent(const McqaItem& item, std::string_view label,
                              std::string_view content);

// Drops one option. Remaining labels keep their original spelling.
McqaItem RemoveOption(const McqaItem& item, std::string_view label);

McqaItem ItemFromJson(const nlohmann::json& json);
nlohmann::ordered_json ItemToJson(const McqaItem& item);

// JSONL, one item per line. Blank lines are skipped. Errors carry the
// 1-based line number.
QuestionSet ParseQuestionSet(std::istream& in, std::string name);
QuestionSet LoadQuestionSet(const std::filesystem::path& path);

std::string SerializeQuestionSet(const QuestionSet& set);
void WriteQuestionSet(const QuestionSet& set, const std::filesystem::path& path);

}  // namespace fidelius

#endif  // FIDELIUS_DATASET_H_
