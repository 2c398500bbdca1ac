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

#include "fidelius/cache.h"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fidelius/mock_backend.h"
#include "fidelius/prompt.h"
#include "fidelius/serialize.h"
#include "test_support.h"

namespace fidelius {
namespace {

using testing::MakeItem;

std::shared_ptr<Backend> Mock() {
  MockModelSpec spec;
  spec.weights["q"] = {{"A", 3}, {"B", 2}, {"C", 1}, {"D", 1}};
  return MockFromSpec(spec);
}

CompletionRequest Greedy() {
  CompletionRequest request;
  request.prompt = RenderPrompt(PromptTemplate::kAnswer, MakeItem("q"), true);
  request.params = DecodeParams::Greedy();
  return request;
}

CompletionRequest Sampled(double temperature, std::optional<int> index) {
  CompletionRequest request = Greedy();
  request.params = DecodeParams{};
  request.params.temperature = temperature;
  request.params.seed = 1;
  request.sample_index = index;
  return request;
}

int EntryCount(const std::filesystem::path& dir) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") ++n;
  }
  return n;
}

TEST(CacheTest, GreedyReplay) {
  testing::TempDir dir;
  auto inner = Mock();
  testing::CountingBackend counting(*inner);
  CachedBackend cached(std::shared_ptr<Backend>(&counting, [](Backend*) {}), dir.path());
  const auto first = cached.Complete(Greedy());
  const auto second = cached.Complete(Greedy());
  EXPECT_FALSE(first.cached);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(first.text, second.text);
  EXPECT_EQ(counting.calls(), 1);
  EXPECT_EQ(cached.hits(), 1);
  EXPECT_EQ(cached.misses(), 1);
}

TEST(CacheTest, TransparentOnFirstCall) {
  testing::TempDir dir;
  auto inner = Mock();
  auto cached = Cached(inner, dir.path());
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(cached->Complete(Sampled(1.0, i)).text, inner->Complete(Sampled(1.0, i)).text);
  }
}

TEST(CacheTest, TemperatureChangesKey) {
  testing::TempDir dir;
  auto cached = Cached(Mock(), dir.path());
  cached->Complete(Sampled(1.0, 0));
  EXPECT_FALSE(cached->Complete(Sampled(0.5, 0)).cached);
  EXPECT_TRUE(cached->Complete(Sampled(0.5, 0)).cached);
  EXPECT_NE(CacheKey(*Mock(), Sampled(1.0, 0)), CacheKey(*Mock(), Sampled(0.5, 0)));
}

TEST(CacheTest, SampleIndexSeparatesEntries) {
  testing::TempDir dir;
  auto cached = Cached(Mock(), dir.path());
  cached->Complete(Sampled(1.0, 0));
  cached->Complete(Sampled(1.0, 1));
  EXPECT_EQ(EntryCount(dir.path()), 2);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.jsonl"));
}

TEST(CacheTest, UnindexedSamplesAreNotStored) {
  testing::TempDir dir;
  auto cached = Cached(Mock(), dir.path());
  EXPECT_FALSE(IsCacheable(Sampled(1.0, std::nullopt)));
  cached->Complete(Sampled(1.0, std::nullopt));
  EXPECT_FALSE(cached->Complete(Sampled(1.0, std::nullopt)).cached);
  EXPECT_EQ(EntryCount(dir.path()), 0);
}

TEST(CacheTest, CorruptEntryIsIgnoredWithWarning) {
  testing::TempDir dir;
  auto cached = Cached(Mock(), dir.path());
  const auto first = cached->Complete(Greedy());
  const auto key = CacheKey(*Mock(), Greedy());
  WriteTextFile(dir / (key + ".json"), "{ truncated");
  testing::WarningCapture warnings;
  const auto again = cached->Complete(Greedy());
  EXPECT_FALSE(again.cached);
  EXPECT_EQ(again.text, first.text);
  EXPECT_EQ(warnings.messages().size(), 1u);
  EXPECT_TRUE(cached->Complete(Greedy()).cached);
}

TEST(CacheTest, KeysDependOnModel) {
  MockModelSpec other;
  other.weights["q"] = {{"A", 1}, {"B", 2}, {"C", 1}, {"D", 1}};
  EXPECT_NE(CacheKey(*Mock(), Greedy()), CacheKey(*MockFromSpec(other), Greedy()));
  EXPECT_EQ(CacheKey(*Mock(), Greedy()), CacheKey(*Mock(), Greedy()));
  EXPECT_EQ(CacheKey(*Mock(), Greedy()).size(), 64u);
}

TEST(CacheTest, LogprobsSurviveReplay) {
  testing::TempDir dir;
  auto cached = Cached(Mock(), dir.path());
  CompletionRequest request = Greedy();
  request.want_label_logprobs = true;
  request.allowed_labels = {"A", "B", "C", "D"};
  const auto first = cached->Complete(request);
  const auto second = cached->Complete(request);
  ASSERT_TRUE(second.cached);
  EXPECT_EQ(first.label_logprobs, second.label_logprobs);
}

}  // namespace
}  // namespace fidelius
