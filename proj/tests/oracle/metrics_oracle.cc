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

#include "oracle/metrics_oracle.h"

#include <cmath>

namespace oracle {

Metrics Compute(const std::vector<double>& confidence, const std::vector<bool>& correct,
                int bins) {
  const size_t n = confidence.size();
  Metrics m;
  std::vector<double> accs;
  double entropy = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins;
    const double hi = static_cast<double>(b + 1) / bins;
    int count = 0;
    int right = 0;
    double conf_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double c = confidence[i];
      const bool inside = (c >= lo && c < hi) || (b == bins - 1 && c == 1.0);
      if (!inside) continue;
      ++count;
      conf_sum += c;
      if (correct[i]) ++right;
    }
    if (count == 0) continue;
    m.ece += std::fabs(static_cast<double>(right) - conf_sum) / static_cast<double>(n);
    accs.push_back(static_cast<double>(right) / count);
    const double p = static_cast<double>(count) / static_cast<double>(n);
    entropy -= p * std::log(p);
  }
  m.ce = entropy / std::log(static_cast<double>(bins));

  const size_t k = accs.size();
  if (k >= 2) {
    long inversions = 0;
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = i + 1; j < k; ++j) {
        if (accs[i] > accs[j]) ++inversions;
      }
    }
    m.ipr = static_cast<double>(inversions) / (static_cast<double>(k * (k - 1)) / 2.0);
  }

  int right = 0;
  for (size_t i = 0; i < n; ++i) {
    const double o = correct[i] ? 1.0 : 0.0;
    m.brier += (confidence[i] - o) * (confidence[i] - o);
    if (correct[i]) ++right;
  }
  m.brier /= static_cast<double>(n);
  m.accuracy = static_cast<double>(right) / static_cast<double>(n);
  return m;
}

std::vector<double> ChainWeights(int length, double tau) {
  std::vector<double> w(length);
  double total = 0.0;
  for (int i = 0; i < length; ++i) {
    w[i] = std::pow(tau, length - i);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

double Entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace oracle
