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

#ifndef FIDELIUS_PROMPT_H_
#define FIDELIUS_PROMPT_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fidelius/dataset.h"

namespace fidelius {

// Answer is shared by the Sampled, Token and fidelity-probing queries.
enum class PromptTemplate { kAnswer, kVerb, kLing };

std::string_view TemplateName(PromptTemplate kind);
std::optional<PromptTemplate> TemplateFromName(std::string_view name);

// Raw template text with {question}, {choices} (and for Ling,
// {EXPRESSION_LIST}) placeholders.
std::string_view TemplateText(PromptTemplate kind);

// "label. content\n" for every option, in item order.
std::string RenderChoices(const McqaItem& item);

// Substitutes {question}, {choices} and {EXPRESSION_LIST}. Throws
// ValidationError when {question} or {choices} is missing.
std::string RenderTemplate(std::string_view text, const McqaItem& item);

// Renders a built-in template. With with_trailer, a final line
// "#qid=<id> #labels=<l1,l2,...>" is appended for the mock backend.
std::string RenderPrompt(PromptTemplate kind, const McqaItem& item,
                         bool with_trailer = false);

// By name: "answer", "verb" or "ling". Unknown names throw.
std::string RenderPrompt(std::string_view template_name, const McqaItem& item,
                         bool with_trailer = false);

std::string MockTrailer(const McqaItem& item);

// Parsed form of MockTrailer(), found on the last line of a prompt.
struct PromptTrailer {
  std::string item_id;
  std::vector<std::string> labels;
};
std::optional<PromptTrailer> ParseTrailer(std::string_view prompt);

}  // namespace fidelius

#endif  // FIDELIUS_PROMPT_H_
