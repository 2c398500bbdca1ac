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

#ifndef FIDELIUS_EXPERIMENT_H_
#define FIDELIUS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fidelius/backend.h"
#include "fidelius/confidence.h"
#include "fidelius/dataset.h"
#include "fidelius/fidelity.h"
#include "fidelius/metrics.h"
#include "fidelius/report.h"
#include "json.hpp"

namespace fidelius {

inline constexpr int kDefaultConcurrency = 4;
inline constexpr const char* kMockTimestamp = "1970-01-01T00:00:00Z";

struct BackendSettings {
  std::string kind = "mock";  // "mock" or "http"
  std::string mock_spec;
  std::string base_url;
  std::string model;
  bool supports_logprobs = true;
  int max_tokens = 32;
  int top_logprobs = 20;
  int max_retries = 3;

  bool operator==(const BackendSettings&) const = default;
};

struct RunConfig {
  std::string dataset;
  BackendSettings backend;
  std::vector<Method> methods;
  int k = kDefaultSamples;
  double tau = kDefaultTau;
  double temperature = 1.0;
  double top_p = 1.0;
  int bins = kDefaultBins;
  std::uint64_t seed = 0;
  std::string cache_dir;
  std::string output_dir = "out";
  int concurrency = kDefaultConcurrency;
  std::string timestamp;  // empty: fixed for mock runs, wall clock otherwise

  bool operator==(const RunConfig&) const = default;

  // Throws ConfigError naming the offending field.
  void Validate() const;

  // Missing keys keep their defaults. Relative paths resolve against `base`.
  static RunConfig FromJson(const nlohmann::json& json,
                            const std::filesystem::path& base = {});
  nlohmann::ordered_json ToJson() const;
};

RunConfig LoadRunConfig(const std::filesystem::path& path);

bool NeedsSampling(std::span<const Method> methods);

DecodeParams SamplingParams(const RunConfig& config);

std::shared_ptr<Backend> MakeBackend(const RunConfig& config);

RunHeader MakeHeader(const RunConfig& config, const QuestionSet& questions,
                     const Backend& backend);

// Runs `fn(i)` for i in [0, n) on up to `concurrency` threads. The first
// exception stops dispatch and is rethrown after all workers finish; indices
// that completed are reported through `done`.
void ParallelFor(int n, int concurrency, const std::function<void(int)>& fn,
                 std::vector<char>* done = nullptr);

struct ReportSet {
  std::vector<MetricReport> reports;
  std::vector<std::pair<Method, ReliabilityDiagram>> diagrams;
};

// Per-method reports in `methods` order; methods without usable records are
// skipped with a warning.
ReportSet ComputeReports(std::span<const ConfidenceRecord> records,
                         std::span<const Method> methods, int bins);

void WriteReports(const ReportSet& set, const std::filesystem::path& out_dir);

struct RunOutcome {
  RunHeader header;
  std::vector<ConfidenceRecord> records;  // item order, then method order
  ReportSet reports;
  std::optional<std::string> fatal_error;

  int unusable_count() const;
  int exit_code() const;  // 0 ok, 2 some unusable records, 1 fatal
};

std::vector<ConfidenceRecord> RunItem(const McqaItem& item, const RunConfig& config,
                                      Backend& backend, ChainMemo* memo = nullptr);

RunOutcome RunExperiment(const RunConfig& config, const QuestionSet& questions,
                         Backend& backend, ChainMemo* memo = nullptr);

// Writes run.jsonl, metrics_<method>.json, diagram_<method>.{csv,svg} and
// compare.{txt,csv} into the output directory.
void WriteOutcome(const RunOutcome& outcome, const std::filesystem::path& out_dir);

ReportSet RecomputeReports(const RunFile& run, int bins);

struct TauSweepRow {
  double tau = 0.0;
  MetricReport report;
};

struct TauSweep {
  std::vector<TauSweepRow> rows;
  std::optional<std::string> fatal_error;
};

// Elicits each item once and rescores the same traces for every tau.
TauSweep SweepTau(const RunConfig& config, const QuestionSet& questions, Backend& backend,
                  std::span<const double> taus);

std::string TauSweepTable(const TauSweep& sweep);

struct TemperatureRun {
  double temperature = 0.0;
  std::vector<MetricReport> reports;
  std::vector<ConfidenceRecord> records;
};

struct TemperatureSweep {
  std::vector<TemperatureRun> runs;
  std::optional<std::string> fatal_error;
};

// Re-runs every method per temperature. Greedy chains are shared through
// `memo` (a private one when null).
TemperatureSweep SweepTemperature(const RunConfig& config, const QuestionSet& questions,
                                  Backend& backend, std::span<const double> temps,
                                  ChainMemo* memo = nullptr);

std::string TemperatureSweepTable(const TemperatureSweep& sweep);

struct CallEstimate {
  long items = 0;
  long sampling = 0;
  long chain_max = 0;
  long single = 0;

  long total() const { return sampling + chain_max + single; }
};

CallEstimate EstimateCalls(const RunConfig& config, const QuestionSet& questions);

std::string FormatEstimate(const CallEstimate& estimate);

}  // namespace fidelius

#endif  // FIDELIUS_EXPERIMENT_H_
