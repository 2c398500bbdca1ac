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

#ifndef FIDELIUS_FIXTURES_H_
#define FIDELIUS_FIXTURES_H_

#include <cstdint>
#include <vector>

#include "fidelius/dataset.h"
#include "fidelius/mock_backend.h"

namespace fidelius {

// A question set together with a mock model that knows every item.
struct SyntheticSuite {
  QuestionSet questions;
  MockModelSpec mock;
};

// Four-option arithmetic questions with a mildly calibrated mock: the mock
// is right on roughly 70% of items and its preference margins vary.
SyntheticSuite MakeSyntheticSmall(int items = 24, std::uint64_t seed = 7);

// Calibration stress suite. Items are split evenly across `strata`; in the
// stratum with correctness p, round(p * size) items have the mock's top
// choice equal to gold. The mock's sampling is peaked on its top choice
// whether or not it is right (overconfident). Its fidelity tracks
// correctness: with probability fidelity_signal an item gets a low
// runner-up weight (accepts the sentinel at once) when correct and a strong
// runner-up (abandons its answer) when wrong; otherwise the two are
// swapped.
struct DesignedSuiteOptions {
  int items = 500;
  std::vector<double> strata = {0.3, 0.5, 0.7, 0.9};
  double fidelity_signal = 0.85;
  double top_weight = 200.0;
  double hesitant_top_weight = 15.0;  // top weight when the chain rejects the sentinel
  double strong_runner_up = 8.0;
  double weak_runner_up = 0.6;
  double sentinel_affinity = 0.1;
  std::uint64_t seed = 2024;
};

SyntheticSuite MakeDesignedSuite(const DesignedSuiteOptions& options = {});

}  // namespace fidelius

#endif  // FIDELIUS_FIXTURES_H_
