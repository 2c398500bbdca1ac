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

#include <gtest/gtest.h>

#include "fidelius/dataset.h"
#include "fidelius/errors.h"
#include "fidelius/ling_table.h"
#include "fidelius/serialize.h"
#include "test_support.h"

namespace fidelius {
namespace {

using testing::MakeItem;

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

int CountChoiceLines(const std::string& text, const McqaItem& item) {
  int n = 0;
  for (const auto& option : item.options) {
    if (text.find("\n" + option.label + ". " + option.content + "\n") != std::string::npos) ++n;
  }
  return n;
}

TEST(PromptTest, TemplatesMatchAssetFiles) {
  for (auto kind : {PromptTemplate::kAnswer, PromptTemplate::kVerb, PromptTemplate::kLing}) {
    const auto path = testing::SourceDir() / "assets" / "prompts" /
                      (std::string(TemplateName(kind)) + ".txt");
    EXPECT_EQ(TemplateText(kind), ReadTextFile(path)) << TemplateName(kind);
  }
}

TEST(PromptTest, AnswerPromptListsChoicesAndEndsWithAnswer) {
  const McqaItem item = MakeItem("q1");
  const std::string text = RenderPrompt(PromptTemplate::kAnswer, item);
  EXPECT_EQ(CountChoiceLines(text, item), 4);
  EXPECT_TRUE(EndsWith(text, "Answer: "));
  EXPECT_NE(text.find("The question is: Which option is right?\n"), std::string::npos);
  EXPECT_EQ(text.find('{'), std::string::npos);
}

TEST(PromptTest, RemovedOptionLeavesThreeLines) {
  const McqaItem item = RemoveOption(MakeItem("q1"), "C");
  const std::string text = RenderPrompt("answer", item);
  EXPECT_EQ(CountChoiceLines(text, item), 3);
  EXPECT_EQ(text.find("C. opt-C"), std::string::npos);
}

TEST(PromptTest, UnknownTemplateName) {
  EXPECT_THROW(RenderPrompt("essay", MakeItem("q1")), ValidationError);
  EXPECT_FALSE(TemplateFromName("essay").has_value());
  EXPECT_EQ(TemplateFromName("verb"), PromptTemplate::kVerb);
}

TEST(PromptTest, MissingPlaceholderIsAnError) {
  const McqaItem item = MakeItem("q1");
  EXPECT_THROW(RenderTemplate("no placeholders", item), ValidationError);
  EXPECT_THROW(RenderTemplate("{question} only", item), ValidationError);
  EXPECT_THROW(RenderTemplate("{choices} only", item), ValidationError);
}

TEST(PromptTest, ChoicesRenderOnePerLine) {
  const McqaItem item = MakeItem("q1", {"A", "B"});
  EXPECT_EQ(RenderChoices(item), "A. opt-A\nB. opt-B\n");
}

TEST(PromptTest, LingPromptCarriesExpressionList) {
  const std::string text = RenderPrompt(PromptTemplate::kLing, MakeItem("q1"));
  EXPECT_NE(text.find(RenderExpressionList()), std::string::npos);
  EXPECT_NE(text.find("Almost Certain, Highly Likely"), std::string::npos);
  EXPECT_EQ(text.find("{EXPRESSION_LIST}"), std::string::npos);
}

TEST(PromptTest, ByteStable) {
  const McqaItem item = MakeItem("q1");
  EXPECT_EQ(RenderPrompt(PromptTemplate::kVerb, item),
            RenderPrompt(PromptTemplate::kVerb, item));
}

TEST(PromptTest, TrailerRoundTrip) {
  const McqaItem item = RemoveOption(MakeItem("item-7"), "B");
  const std::string text = RenderPrompt(PromptTemplate::kAnswer, item, true);
  EXPECT_TRUE(EndsWith(text, "\n#qid=item-7 #labels=A,C,D"));
  auto trailer = ParseTrailer(text);
  ASSERT_TRUE(trailer.has_value());
  EXPECT_EQ(trailer->item_id, "item-7");
  EXPECT_EQ(trailer->labels, (std::vector<std::string>{"A", "C", "D"}));
  EXPECT_FALSE(ParseTrailer(RenderPrompt(PromptTemplate::kAnswer, item)).has_value());
}

}  // namespace
}  // namespace fidelius
