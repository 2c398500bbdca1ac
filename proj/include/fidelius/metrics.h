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

#ifndef FIDELIUS_METRICS_H_
#define FIDELIUS_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "fidelius/confidence.h"
#include "json.hpp"

namespace fidelius {

inline constexpr int kDefaultBins = 10;

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mean_conf = 0.0;  // 0 for empty bins
  double accuracy = 0.0;   // 0 for empty bins

  bool operator==(const ReliabilityBin&) const = default;
};

// Equal-width bins over [0, 1]: bin m covers [m/M, (m+1)/M), and the last
// bin also takes 1.0.
struct ReliabilityDiagram {
  std::vector<ReliabilityBin> bins;
  int n = 0;

  bool operator==(const ReliabilityDiagram&) const = default;

  int num_bins() const { return static_cast<int>(bins.size()); }
};

int BinIndex(double confidence, int num_bins);

// Bins usable records by confidence of the chosen answer. Throws
// ValidationError if there are none, num_bins < 2, or a confidence lies
// outside [0, 1].
ReliabilityDiagram BinRecords(std::span<const ConfidenceRecord> records,
                              int num_bins = kDefaultBins);

// Count-weighted mean |accuracy - mean confidence| over bins.
double Ece(const ReliabilityDiagram& diagram);

// Share of nonempty-bin pairs (i < j) whose accuracies are strictly
// inverted, acc_i > acc_j. Zero with fewer than two nonempty bins.
double Ipr(const ReliabilityDiagram& diagram);

// Entropy of the bin densities normalized by log(num_bins).
double Ce(const ReliabilityDiagram& diagram);

// Mean squared gap between confidence and the 0/1 outcome, and plain
// accuracy, both over usable records. Throw when there are none.
double Brier(std::span<const ConfidenceRecord> records);
double Accuracy(std::span<const ConfidenceRecord> records);

struct MetricReport {
  Method method = Method::kOurs;
  int bins = kDefaultBins;
  double ece = 0.0;
  double ipr = 0.0;
  double ce = 0.0;
  double brier = 0.0;
  double accuracy = 0.0;
  int usable_count = 0;
  int flagged_count = 0;

  bool operator==(const MetricReport&) const = default;
};

// All metrics for one method. Unusable records are counted as flagged and
// left out of every metric.
MetricReport Evaluate(std::span<const ConfidenceRecord> records, Method method,
                      int num_bins = kDefaultBins);

nlohmann::ordered_json ReportToJson(const MetricReport& report);

}  // namespace fidelius

#endif  // FIDELIUS_METRICS_H_
