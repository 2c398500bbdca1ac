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
#include "fidelius/backend.h"

#include <cmath>

#include <fmt/core.h>

#include "fidelius/errors.h"

namespace fidelius {

std::string_view DecodeModeName(DecodeMode mode) {
  return mode == DecodeMode::kGreedy ? "greedy" : "sample";
}

DecodeParams DecodeParams::Greedy() {
  DecodeParams params;
  params.temperature = 0.0;
  params.top_p = 1.0;
  params.mode = DecodeMode::kGreedy;
  return params;
}

void DecodeParams::Validate() const {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw ValidationError(fmt::format("temperature must be >= 0, got {}", temperature));
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ValidationError(fmt::format("top_p must be in (0, 1], got {}", top_p));
  }
  if (mode == DecodeMode::kSample && temperature <= 0.0) {
    throw ValidationError("sampling requires temperature > 0");
  }
}

void CompletionRequest::Validate() const {
  if (prompt.empty()) throw ValidationError("empty prompt");
  params.Validate();
  if (want_label_logprobs && allowed_labels.empty()) {
    throw ValidationError("label logprobs requested without allowed labels");
  }
}

}  // namespace fidelius
