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

#ifndef FIDELIUS_REPORT_H_
#define FIDELIUS_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fidelius/confidence.h"
#include "fidelius/metrics.h"
#include "json.hpp"

namespace fidelius {

inline constexpr std::string_view kRunSchema = "fidelius.run/1";

// Configuration snapshot written as the first line of a run file.
struct RunHeader {
  std::string schema{kRunSchema};
  std::string backend_id;
  std::string model;
  std::string dataset;
  int k = 0;
  double tau = 0.0;
  double temperature = 0.0;
  double top_p = 0.0;
  int bins = kDefaultBins;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::vector<std::string> methods;

  bool operator==(const RunHeader&) const = default;
};

struct RunFile {
  RunHeader header;
  std::vector<ConfidenceRecord> records;
};

// Rounds every real in the record to 12 significant digits, i.e. to the
// value it will have after a write/read cycle.
ConfidenceRecord QuantizeRecord(ConfidenceRecord record);

nlohmann::ordered_json HeaderToJson(const RunHeader& header);
nlohmann::ordered_json RecordToJson(const ConfidenceRecord& record);
ConfidenceRecord RecordFromJson(const nlohmann::json& json);

// JSONL: header line, then one line per record in the given order. Keys
// are written in a fixed order; reals carry 12 significant digits.
std::string SerializeRun(const RunHeader& header,
                         std::span<const ConfidenceRecord> records);
void WriteRun(std::span<const ConfidenceRecord> records, const RunHeader& header,
              const std::filesystem::path& path);

// Throws ParseError with the failing line number, including for a schema
// other than kRunSchema.
RunFile ParseRun(std::istream& in);
RunFile ReadRun(const std::filesystem::path& path);

// Records per method, each group in file order.
std::map<Method, std::vector<ConfidenceRecord>> GroupByMethod(
    std::span<const ConfidenceRecord> records);

// CSV with columns bin_lo,bin_hi,count,density,mean_conf,accuracy; one row
// per bin.
std::string DiagramCsv(const ReliabilityDiagram& diagram);

// 640x480 bar chart: accuracy per confidence bin, bar opacity proportional
// to bin density, dashed identity line. Byte-stable for equal input.
std::string DiagramSvg(const ReliabilityDiagram& diagram, std::string_view title);

// Writes <base>.csv and <base>.svg.
void RenderDiagram(const ReliabilityDiagram& diagram, const std::filesystem::path& base,
                   std::string_view title = "Reliability diagram");

struct ComparisonTable {
  std::string text;
  std::string csv;
};

// One row per report. Best ECE, IPR (lowest) and CE, accuracy (highest)
// are starred; ties all get the star.
ComparisonTable CompareTable(std::span<const MetricReport> reports);

}  // namespace fidelius

#endif  // FIDELIUS_REPORT_H_
