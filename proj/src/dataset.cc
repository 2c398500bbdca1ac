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
#include "fidelius/dataset.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>
#include <utility>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/log.h"
#include "fidelius/serialize.h"

namespace fidelius {

bool McqaItem::has_label(std::string_view label) const {
  return find(label) != nullptr;
}

const Option* McqaItem::find(std::string_view label) const {
  auto it = std::find_if(options.begin(), options.end(),
                         [&](const Option& o) { return o.label == label; });
  return it == options.end() ? nullptr : &*it;
}

std::vector<std::string> McqaItem::labels() const {
  std::vector<std::string> out;
  out.reserve(options.size());
  for (const auto& option : options) out.push_back(option.label);
  return out;
}

void ValidateItem(const McqaItem& item) {
  if (item.id.empty()) throw ValidationError("item has an empty id");
  if (item.options.size() < 2) {
    throw ValidationError(
        fmt::format("item '{}': needs at least 2 options, has {}", item.id,
                    item.options.size()));
  }
  std::set<std::string_view> seen;
  for (const auto& option : item.options) {
    if (option.label.empty()) {
      throw ValidationError(fmt::format("item '{}': empty option label", item.id));
    }
    if (!seen.insert(option.label).second) {
      throw ValidationError(fmt::format("item '{}': duplicate option label '{}'",
                                        item.id, option.label));
    }
  }
  if (!item.has_label(item.gold_label)) {
    throw ValidationError(fmt::format(
        "item '{}': gold label '{}' is not among its options", item.id,
        item.gold_label));
  }
  if (!item.meta.is_null() && !item.meta.is_object()) {
    throw ValidationError(fmt::format("item '{}': meta must be an object", item.id));
  }
}

McqaItem ReplaceOptionContent(const McqaItem& item, std::string_view label,
                              std::string_view content) {
  McqaItem out = item;
  auto it = std::find_if(out.options.begin(), out.options.end(),
                         [&](const Option& o) { return o.label == label; });
  if (it == out.options.end()) {
    throw ValidationError(
        fmt::format("item '{}': no option labelled '{}'", item.id, label));
  }
  it->content = std::string(content);
  return out;
}

McqaItem RemoveOption(const McqaItem& item, std::string_view label) {
  auto it = std::find_if(item.options.begin(), item.options.end(),
                         [&](const Option& o) { return o.label == label; });
  if (it == item.options.end()) {
    throw ValidationError(
        fmt::format("item '{}': no option labelled '{}'", item.id, label));
  }
  if (item.options.size() < 2) {
    throw ValidationError(fmt::format(
        "item '{}': cannot remove '{}', it is the last option", item.id, label));
  }
  McqaItem out = item;
  out.options.erase(out.options.begin() + (it - item.options.begin()));
  return out;
}

namespace {

const nlohmann::json& Field(const nlohmann::json& json, const char* key) {
  auto it = json.find(key);
  if (it == json.end()) throw ParseError(fmt::format("missing field '{}'", key));
  return *it;
}

std::string StringField(const nlohmann::json& json, const char* key) {
  const auto& value = Field(json, key);
  if (!value.is_string()) {
    throw ParseError(fmt::format("field '{}' must be a string", key));
  }
  return value.get<std::string>();
}

}  // namespace

McqaItem ItemFromJson(const nlohmann::json& json) {
  if (!json.is_object()) throw ParseError("record must be a JSON object");
  McqaItem item;
  item.id = StringField(json, "id");
  item.question = StringField(json, "question");
  item.gold_label = StringField(json, "gold");
  const auto& options = Field(json, "options");
  if (!options.is_array()) throw ParseError("field 'options' must be an array");
  for (const auto& option : options) {
    if (!option.is_object()) throw ParseError("each option must be an object");
    item.options.push_back(
        {StringField(option, "label"), StringField(option, "content")});
  }
  if (auto it = json.find("meta"); it != json.end()) item.meta = *it;
  return item;
}

nlohmann::ordered_json ItemToJson(const McqaItem& item) {
  nlohmann::ordered_json json;
  json["id"] = item.id;
  json["question"] = item.question;
  auto& options = json["options"] = nlohmann::ordered_json::array();
  for (const auto& option : item.options) {
    options.push_back({{"label", option.label}, {"content", option.content}});
  }
  json["gold"] = item.gold_label;
  if (!item.meta.is_null()) json["meta"] = item.meta;
  return json;
}

QuestionSet ParseQuestionSet(std::istream& in, std::string name) {
  QuestionSet set;
  set.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    McqaItem item;
    try {
      item = ItemFromJson(nlohmann::json::parse(line));
      ValidateItem(item);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("malformed JSON: {}", e.what()), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!ids.insert(item.id).second) {
      throw ParseError(fmt::format("duplicate item id '{}'", item.id), line_no);
    }
    set.items.push_back(std::move(item));
  }
  if (set.items.empty()) Warn(fmt::format("question set '{}' is empty", set.name));
  return set;
}

QuestionSet LoadQuestionSet(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open question set '{}'", path.string()));
  try {
    return ParseQuestionSet(in, path.stem().string());
  } catch (const ParseError& e) {
    throw e.WithContext(path.string());
  }
}

std::string SerializeQuestionSet(const QuestionSet& set) {
  std::string out;
  for (const auto& item : set.items) {
    out += DumpLine(ItemToJson(item));
    out += '\n';
  }
  return out;
}

void WriteQuestionSet(const QuestionSet& set, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeQuestionSet(set));
}

}  // namespace fidelius
