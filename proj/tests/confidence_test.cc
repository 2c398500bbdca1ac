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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fidelius/errors.h"
#include "fidelius/mock_backend.h"
#include "oracle/metrics_oracle.h"
#include "test_support.h"

namespace fidelius {
namespace {

using Probs = std::map<std::string, double>;

using testing::MakeItem;

FidelityChain Chain(std::vector<std::string> elements) {
  FidelityChain chain;
  chain.item_id = "q";
  chain.start = elements.front();
  chain.elements = std::move(elements);
  chain.terminated_by_sentinel = true;
  return chain;
}

ItemTrace WorkedTrace() {
  ItemTrace trace;
  trace.dist = MakeDistribution("q", {{"A", 7}, {"B", 2}, {"C", 1}});
  trace.chains = {{Chain({"A"}), 0.7}, {Chain({"B", "A"}), 0.2}, {Chain({"C", "A", "B"}), 0.1}};
  return trace;
}

double Sum(const std::map<std::string, double>& m) {
  double s = 0.0;
  for (const auto& [k, v] : m) s += v;
  return s;
}

TEST(ConfidenceTest, UncertaintyExamples) {
  EXPECT_DOUBLE_EQ(Uncertainty(Probs{{"A", 1.0}}, 4), 0.0);
  EXPECT_NEAR(Uncertainty(Probs{{"A", 0.25}, {"B", 0.25}, {"C", 0.25}, {"D", 0.25}}, 4), 1.0, 1e-12);
  EXPECT_NEAR(Uncertainty(Probs{{"A", 0.5}, {"B", 0.5}}, 4), std::log(2.0) / std::log(4.0), 1e-15);
  EXPECT_NEAR(Uncertainty(Probs{{"A", 0.5}, {"B", 0.5}}, 4), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(Uncertainty(Probs{{"A", 0.0}, {"B", 1.0}}, 4), 0.0);
  EXPECT_THROW(Uncertainty(Probs{{"A", 1.0}}, 1), ValidationError);
}

TEST(ConfidenceTest, UncertaintyIgnoresLabelNames) {
  EXPECT_DOUBLE_EQ(Uncertainty(Probs{{"A", 0.7}, {"B", 0.2}, {"C", 0.1}}, 4),
                   Uncertainty(Probs{{"D", 0.1}, {"A", 0.2}, {"B", 0.7}}, 4));
}

TEST(ConfidenceTest, CombineExamples) {
  FidelityScores certain;
  certain.per_answer = {{"A", 1.0}};
  EXPECT_EQ(Combine(0.0, certain), (std::map<std::string, double>{{"A", 1.0}}));
  FidelityScores split;
  split.per_answer = {{"A", 0.8}, {"B", 0.2}};
  const auto c = Combine(0.5, split);
  EXPECT_DOUBLE_EQ(c.at("A"), 0.4);
  EXPECT_DOUBLE_EQ(c.at("B"), 0.1);
}

TEST(ConfidenceTest, WorkedExample) {
  const McqaItem item = MakeItem("q");
  const ConfidenceRecord record = ScoreOurs(item, WorkedTrace(), 2.0);
  // Hand computation: U = -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1) / ln 4,
  // F(A) = 167/210, Conf(A) = (1 - U) F(A).
  const double u = -(0.7 * std::log(0.7) + 0.2 * std::log(0.2) + 0.1 * std::log(0.1)) /
                   std::log(4.0);
  const double f_a = 167.0 / 210.0;
  ASSERT_TRUE(record.uncertainty.has_value());
  EXPECT_NEAR(*record.uncertainty, u, 1e-12);
  EXPECT_NEAR(*record.uncertainty, 0.578389824724, 1e-9);
  EXPECT_EQ(record.chosen, "A");
  EXPECT_NEAR(record.confidence, (1 - u) * f_a, 1e-12);
  EXPECT_NEAR(record.confidence, 0.335280472720, 1e-9);
  EXPECT_NEAR(Sum(record.per_answer), 1 - u, 1e-12);
  EXPECT_TRUE(record.correct);
  EXPECT_EQ(record.sample_counts.at("A"), 7);
  EXPECT_EQ(record.chains.size(), 3u);
}

TEST(ConfidenceTest, AblationVariants) {
  const McqaItem item = MakeItem("q", {"A", "B", "C", "D"}, "B");
  const ItemTrace trace = WorkedTrace();
  const ConfidenceRecord full = ScoreOurs(item, trace, 2.0, Method::kOurs);
  const ConfidenceRecord no_u = ScoreOurs(item, trace, 2.0, Method::kOursNoU);
  const ConfidenceRecord no_f = ScoreOurs(item, trace, 2.0, Method::kOursNoF);
  const FidelityScores f = ScoreChains("q", trace.chains, 2.0);
  EXPECT_EQ(no_u.per_answer, Combine(0.0, f));
  EXPECT_DOUBLE_EQ(*no_u.uncertainty, 0.0);
  EXPECT_DOUBLE_EQ(no_f.confidence, 1.0 - *full.uncertainty);
  EXPECT_EQ(no_f.per_answer.size(), 1u);
  for (const auto& r : {full, no_u, no_f}) {
    EXPECT_EQ(r.chosen, "A");
    EXPECT_FALSE(r.correct);
  }
  EXPECT_THROW(ScoreOurs(item, trace, 2.0, Method::kVerb), ValidationError);
}

TEST(ConfidenceTest, MismatchFlag) {
  ItemTrace trace;
  trace.dist = MakeDistribution("q", {{"A", 6}, {"B", 4}});
  trace.chains = {{Chain({"A", "B"}), 0.6}, {Chain({"B"}), 0.4}};
  const ConfidenceRecord record = ScoreOurs(MakeItem("q"), trace, 2.0);
  EXPECT_EQ(record.chosen, "A");
  EXPECT_GT(record.per_answer.at("B"), record.per_answer.at("A"));
  EXPECT_TRUE(record.flags.contains(flags::kMismatch));
  EXPECT_FALSE(ScoreOurs(MakeItem("q"), WorkedTrace(), 2.0).flags.contains(flags::kMismatch));
}

TEST(ConfidenceTest, DegenerateMockIsFullyConfident) {
  MockModelSpec spec;
  spec.weights["q"] = {{"A", 1e6}, {"B", 1e-6}, {"C", 1e-6}, {"D", 1e-6}};
  spec.sentinel_affinity = 1.0;
  MockBackend mock(spec);
  DecodeParams params;
  params.seed = 1;
  for (const char* gold : {"A", "B"}) {
    const ConfidenceRecord record =
        RunOurs(MakeItem("q", {"A", "B", "C", "D"}, gold), mock, 10, 2.0, params);
    EXPECT_DOUBLE_EQ(*record.uncertainty, 0.0);
    EXPECT_DOUBLE_EQ(record.confidence, 1.0);
    EXPECT_EQ(record.correct, std::string(gold) == "A");
  }
}

TEST(ConfidenceTest, SingleSampleHasNoUncertainty) {
  MockModelSpec spec;
  spec.weights["q"] = {{"A", 2}, {"B", 2}, {"C", 2}, {"D", 2}};
  spec.sentinel_affinity = 0.5;
  MockBackend mock(spec);
  DecodeParams params;
  params.seed = 4;
  const ConfidenceRecord record = RunOurs(MakeItem("q"), mock, 1, 2.0, params);
  EXPECT_DOUBLE_EQ(*record.uncertainty, 0.0);
  ASSERT_EQ(record.chains.size(), 1u);
  EXPECT_DOUBLE_EQ(record.confidence,
                   ChainFidelity(record.chains[0].chain, 2.0).at(record.chosen));
}

TEST(ConfidenceTest, UnusableDistributionGivesUnusableRecord) {
  ItemTrace trace;
  trace.dist.item_id = "q";
  trace.dist.flags.emplace(flags::kUnusable);
  const ConfidenceRecord record = ScoreOurs(MakeItem("q"), trace, 2.0);
  EXPECT_FALSE(record.usable());
}

TEST(ConfidenceTest, RandomIdentity) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    FidelityScores f;
    double total = 0.0;
    for (const char* label : {"A", "B", "C", "D"}) {
      f.per_answer[label] = unit(rng);
      total += f.per_answer[label];
    }
    for (auto& [label, v] : f.per_answer) v /= total;
    const double u = unit(rng);
    const auto c = Combine(u, f);
    EXPECT_NEAR(Sum(c), 1.0 - u, 1e-12);
    for (const auto& [label, v] : c) EXPECT_LE(v, 1.0 - u + 1e-15);
  }
}

TEST(ConfidenceTest, MethodNames) {
  for (Method m : {Method::kOurs, Method::kOursNoU, Method::kOursNoF, Method::kVerb,
                   Method::kLing, Method::kSampled, Method::kToken}) {
    EXPECT_EQ(MethodFromName(MethodName(m)), m);
  }
  EXPECT_EQ(MethodFromName("ours-no-u"), Method::kOursNoU);
  EXPECT_FALSE(MethodFromName("nope").has_value());
}

}  // namespace
}  // namespace fidelius
