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

#include "fidelius/fixtures.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include <fmt/core.h>

#include "fidelius/errors.h"

namespace fidelius {
namespace {

constexpr std::array<const char*, 4> kLabels = {"A", "B", "C", "D"};

// The standard distributions are implementation-defined; these are not,
// so fixtures are byte-identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t Below(std::uint64_t n) { return engine_() % n; }
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Between(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// "What is a + b?" with the true sum under gold_index and nearby
// distractors elsewhere.
McqaItem ArithmeticItem(std::string id, int gold_index, Rng& rng) {
  const int a = 10 + static_cast<int>(rng.Below(90));
  const int b = 10 + static_cast<int>(rng.Below(90));
  const int sum = a + b;
  std::vector<int> distractors;
  while (distractors.size() < 3) {
    const int offset = 1 + static_cast<int>(rng.Below(12));
    const int candidate = rng.Below(2) ? sum + offset : sum - offset;
    if (std::find(distractors.begin(), distractors.end(), candidate) == distractors.end()) {
      distractors.push_back(candidate);
    }
  }
  McqaItem item;
  item.id = std::move(id);
  item.question = fmt::format("What is {} + {}?", a, b);
  for (int i = 0, d = 0; i < 4; ++i) {
    const int value = i == gold_index ? sum : distractors[d++];
    item.options.push_back({kLabels[i], std::to_string(value)});
  }
  item.gold_label = kLabels[gold_index];
  item.meta = {{"subject", "arithmetic"}, {"source", "synthetic"}};
  return item;
}

}  // namespace

SyntheticSuite MakeSyntheticSmall(int items, std::uint64_t seed) {
  if (items < 1) throw ValidationError("fixture needs at least one item");
  Rng rng(seed);
  SyntheticSuite suite;
  suite.questions.name = "synthetic_small";
  suite.mock.sentinel_affinity = 0.3;
  for (int n = 0; n < items; ++n) {
    const int gold = static_cast<int>(rng.Below(4));
    McqaItem item = ArithmeticItem(fmt::format("syn-{:04d}", n + 1), gold, rng);
    const bool right = rng.Uniform() < 0.7;
    int top = gold;
    if (!right) top = (gold + 1 + static_cast<int>(rng.Below(3))) % 4;
    auto& weights = suite.mock.weights[item.id];
    for (int i = 0; i < 4; ++i) {
      weights[kLabels[i]] = i == top ? rng.Between(3.0, 12.0) : rng.Between(0.3, 3.0);
    }
    suite.questions.items.push_back(std::move(item));
  }
  return suite;
}

SyntheticSuite MakeDesignedSuite(const DesignedSuiteOptions& options) {
  if (options.items < 1 || options.strata.empty()) {
    throw ValidationError("designed suite needs items and strata");
  }
  Rng rng(options.seed);
  SyntheticSuite suite;
  suite.questions.name = "designed_calibration";
  suite.mock.sentinel_affinity = options.sentinel_affinity;

  const int strata = static_cast<int>(options.strata.size());
  int next_id = 1;
  for (int s = 0; s < strata; ++s) {
    const int size = options.items / strata + (s < options.items % strata ? 1 : 0);
    const double p = options.strata[s];
    const int n_correct = static_cast<int>(std::llround(p * size));
    std::vector<bool> correct(size, false);
    for (int i = 0; i < n_correct; ++i) correct[i] = true;
    rng.Shuffle(correct);

    for (int i = 0; i < size; ++i) {
      const int top = static_cast<int>(rng.Below(4));
      const int runner_up = (top + 1 + static_cast<int>(rng.Below(3))) % 4;
      const int gold = correct[i] ? top : runner_up;
      McqaItem item = ArithmeticItem(fmt::format("cal-{:04d}", next_id++), gold, rng);
      item.meta["stratum"] = p;

      const bool signal_agrees = rng.Uniform() < options.fidelity_signal;
      const bool faithful = correct[i] == signal_agrees;
      auto& weights = suite.mock.weights[item.id];
      double filler = 0.5;
      for (int l = 0; l < 4; ++l) {
        double w;
        if (l == top) {
          w = faithful ? options.top_weight : options.hesitant_top_weight;
        } else if (l == runner_up) {
          w = faithful ? options.weak_runner_up : options.strong_runner_up;
        } else {
          w = faithful ? 0.4 : filler;
          filler -= 0.1;
        }
        weights[kLabels[l]] = w;
      }
      suite.questions.items.push_back(std::move(item));
    }
  }
  return suite;
}

}  // namespace fidelius
