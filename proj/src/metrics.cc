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

#include "fidelius/metrics.h"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/serialize.h"

namespace fidelius {
namespace {

std::vector<const ConfidenceRecord*> Usable(std::span<const ConfidenceRecord> records) {
  std::vector<const ConfidenceRecord*> out;
  for (const auto& r : records) {
    if (!r.usable()) continue;
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw ValidationError(fmt::format("record '{}' ({}): confidence {} outside [0, 1]",
                                        r.item_id, MethodName(r.method), r.confidence));
    }
    out.push_back(&r);
  }
  if (out.empty()) throw ValidationError("no usable records");
  return out;
}

double NormalizedEntropy(const std::vector<double>& probs, int support) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(support)), 0.0, 1.0);
}

}  // namespace

int BinIndex(double confidence, int num_bins) {
  int m = static_cast<int>(std::floor(confidence * num_bins));
  m = std::clamp(m, 0, num_bins - 1);
  // Settle floating-point disagreement between c * M and the edges m / M.
  while (m > 0 && confidence < static_cast<double>(m) / num_bins) --m;
  while (m < num_bins - 1 && confidence >= static_cast<double>(m + 1) / num_bins) ++m;
  return m;
}

ReliabilityDiagram BinRecords(std::span<const ConfidenceRecord> records, int num_bins) {
  if (num_bins < 2) {
    throw ValidationError(fmt::format("need at least 2 bins, got {}", num_bins));
  }
  const auto usable = Usable(records);
  ReliabilityDiagram diagram;
  diagram.bins.resize(num_bins);
  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<int> correct(num_bins, 0);
  for (int m = 0; m < num_bins; ++m) {
    diagram.bins[m].lo = static_cast<double>(m) / num_bins;
    diagram.bins[m].hi = static_cast<double>(m + 1) / num_bins;
  }
  for (const auto* r : usable) {
    const int m = BinIndex(r->confidence, num_bins);
    ++diagram.bins[m].count;
    conf_sum[m] += r->confidence;
    correct[m] += r->correct ? 1 : 0;
  }
  for (int m = 0; m < num_bins; ++m) {
    auto& bin = diagram.bins[m];
    if (bin.count == 0) continue;
    bin.mean_conf = conf_sum[m] / bin.count;
    bin.accuracy = static_cast<double>(correct[m]) / bin.count;
  }
  diagram.n = static_cast<int>(usable.size());
  return diagram;
}

double Ece(const ReliabilityDiagram& diagram) {
  if (diagram.n == 0) return 0.0;
  double ece = 0.0;
  for (const auto& bin : diagram.bins) {
    if (bin.count == 0) continue;
    ece += static_cast<double>(bin.count) / diagram.n * std::abs(bin.accuracy - bin.mean_conf);
  }
  return ece;
}

double Ipr(const ReliabilityDiagram& diagram) {
  std::vector<double> acc;
  for (const auto& bin : diagram.bins) {
    if (bin.count > 0) acc.push_back(bin.accuracy);
  }
  const size_t k = acc.size();
  if (k < 2) return 0.0;
  long inversions = 0;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i + 1; j < k; ++j) {
      if (acc[i] > acc[j]) ++inversions;
    }
  }
  return static_cast<double>(inversions) / (static_cast<double>(k) * (k - 1) / 2.0);
}

double Ce(const ReliabilityDiagram& diagram) {
  if (diagram.n == 0) return 0.0;
  std::vector<double> density;
  for (const auto& bin : diagram.bins) {
    density.push_back(static_cast<double>(bin.count) / diagram.n);
  }
  return NormalizedEntropy(density, diagram.num_bins());
}

double Brier(std::span<const ConfidenceRecord> records) {
  const auto usable = Usable(records);
  double total = 0.0;
  for (const auto* r : usable) {
    const double gap = r->confidence - (r->correct ? 1.0 : 0.0);
    total += gap * gap;
  }
  return total / usable.size();
}

double Accuracy(std::span<const ConfidenceRecord> records) {
  const auto usable = Usable(records);
  long correct = 0;
  for (const auto* r : usable) correct += r->correct ? 1 : 0;
  return static_cast<double>(correct) / usable.size();
}

MetricReport Evaluate(std::span<const ConfidenceRecord> records, Method method,
                      int num_bins) {
  MetricReport report;
  report.method = method;
  report.bins = num_bins;
  for (const auto& r : records) {
    if (r.usable()) {
      ++report.usable_count;
    } else {
      ++report.flagged_count;
    }
  }
  if (report.usable_count == 0) {
    throw ValidationError(
        fmt::format("method '{}': no usable records to evaluate", MethodName(method)));
  }
  const ReliabilityDiagram diagram = BinRecords(records, num_bins);
  report.ece = Ece(diagram);
  report.ipr = Ipr(diagram);
  report.ce = Ce(diagram);
  report.brier = Brier(records);
  report.accuracy = Accuracy(records);
  return report;
}

nlohmann::ordered_json ReportToJson(const MetricReport& report) {
  nlohmann::ordered_json json;
  json["method"] = MethodName(report.method);
  json["bins"] = report.bins;
  json["ece"] = Round12(report.ece);
  json["ipr"] = Round12(report.ipr);
  json["ce"] = Round12(report.ce);
  json["brier"] = Round12(report.brier);
  json["accuracy"] = Round12(report.accuracy);
  json["usable_count"] = report.usable_count;
  json["flagged_count"] = report.flagged_count;
  return json;
}

}  // namespace fidelius
