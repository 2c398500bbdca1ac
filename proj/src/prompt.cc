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

#include "fidelius/prompt.h"

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/ling_table.h"

namespace fidelius {

namespace internal {
extern const std::string_view kAnswerTemplate;
extern const std::string_view kVerbTemplate;
extern const std::string_view kLingTemplate;
}  // namespace internal

namespace {

constexpr std::string_view kQuestion = "{question}";
constexpr std::string_view kChoices = "{choices}";
constexpr std::string_view kExpressionList = "{EXPRESSION_LIST}";
constexpr std::string_view kTrailerId = "#qid=";
constexpr std::string_view kTrailerLabels = " #labels=";

void ReplaceAll(std::string& text, std::string_view from, std::string_view to) {
  for (size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string_view TemplateName(PromptTemplate kind) {
  switch (kind) {
    case PromptTemplate::kAnswer: return "answer";
    case PromptTemplate::kVerb: return "verb";
    case PromptTemplate::kLing: return "ling";
  }
  return "answer";
}

std::optional<PromptTemplate> TemplateFromName(std::string_view name) {
  for (auto kind : {PromptTemplate::kAnswer, PromptTemplate::kVerb,
                    PromptTemplate::kLing}) {
    if (TemplateName(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view TemplateText(PromptTemplate kind) {
  switch (kind) {
    case PromptTemplate::kAnswer: return internal::kAnswerTemplate;
    case PromptTemplate::kVerb: return internal::kVerbTemplate;
    case PromptTemplate::kLing: return internal::kLingTemplate;
  }
  return internal::kAnswerTemplate;
}

std::string RenderChoices(const McqaItem& item) {
  std::string out;
  for (const auto& option : item.options) {
    out += option.label;
    out += ". ";
    out += option.content;
    out += '\n';
  }
  return out;
}

std::string RenderTemplate(std::string_view text, const McqaItem& item) {
  if (text.find(kQuestion) == std::string_view::npos) {
    throw ValidationError("prompt template lacks the {question} placeholder");
  }
  if (text.find(kChoices) == std::string_view::npos) {
    throw ValidationError("prompt template lacks the {choices} placeholder");
  }
  // Substitute the fixed list first so that question text containing a
  // literal placeholder is never re-expanded.
  std::string out(text);
  ReplaceAll(out, kExpressionList, RenderExpressionList());
  const size_t q = out.find(kQuestion);
  out.replace(q, kQuestion.size(), item.question);
  const size_t c = out.find(kChoices, q + item.question.size());
  if (c == std::string::npos) {
    throw ValidationError("prompt template has {choices} before {question}");
  }
  out.replace(c, kChoices.size(), RenderChoices(item));
  return out;
}

std::string MockTrailer(const McqaItem& item) {
  std::string out(kTrailerId);
  out += item.id;
  out += kTrailerLabels;
  for (size_t i = 0; i < item.options.size(); ++i) {
    if (i > 0) out += ',';
    out += item.options[i].label;
  }
  return out;
}

std::string RenderPrompt(PromptTemplate kind, const McqaItem& item,
                         bool with_trailer) {
  std::string out = RenderTemplate(TemplateText(kind), item);
  if (with_trailer) {
    out += '\n';
    out += MockTrailer(item);
  }
  return out;
}

std::string RenderPrompt(std::string_view template_name, const McqaItem& item,
                         bool with_trailer) {
  auto kind = TemplateFromName(template_name);
  if (!kind) {
    throw ValidationError(fmt::format("unknown prompt template '{}'", template_name));
  }
  return RenderPrompt(*kind, item, with_trailer);
}

std::optional<PromptTrailer> ParseTrailer(std::string_view prompt) {
  const size_t nl = prompt.rfind('\n');
  std::string_view line = nl == std::string_view::npos ? prompt : prompt.substr(nl + 1);
  if (!line.starts_with(kTrailerId)) return std::nullopt;
  line.remove_prefix(kTrailerId.size());
  const size_t sep = line.rfind(kTrailerLabels);
  if (sep == std::string_view::npos) return std::nullopt;
  PromptTrailer trailer;
  trailer.item_id = std::string(line.substr(0, sep));
  std::string_view labels = line.substr(sep + kTrailerLabels.size());
  while (!labels.empty()) {
    const size_t comma = labels.find(',');
    trailer.labels.emplace_back(labels.substr(0, comma));
    if (comma == std::string_view::npos) break;
    labels.remove_prefix(comma + 1);
  }
  if (trailer.item_id.empty() || trailer.labels.empty()) return std::nullopt;
  return trailer;
}

}  // namespace fidelius
