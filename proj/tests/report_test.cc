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

#include "fidelius/report.h"

#include <sstream>

#include <gtest/gtest.h>

#include "fidelius/errors.h"
#include "fidelius/serialize.h"
#include "test_support.h"

namespace fidelius {
namespace {

ConfidenceRecord Record(std::string id, Method method, double confidence, bool correct) {
  ConfidenceRecord r;
  r.item_id = std::move(id);
  r.method = method;
  r.chosen = "B";
  r.confidence = confidence;
  r.per_answer = {{"B", confidence}, {"A", confidence / 3}};
  r.correct = correct;
  return r;
}

RunHeader Header() {
  RunHeader h;
  h.backend_id = "mock";
  h.model = "spec-0";
  h.dataset = "tiny";
  h.k = 10;
  h.tau = 2;
  h.temperature = 1;
  h.top_p = 1;
  h.seed = 7;
  h.timestamp = "1970-01-01T00:00:00Z";
  h.methods = {"ours", "sampled"};
  return h;
}

std::vector<ConfidenceRecord> FiftyRecords() {
  std::vector<ConfidenceRecord> rs;
  for (int i = 0; i < 50; ++i) {
    ConfidenceRecord r =
        Record("q" + std::to_string(i), i % 2 ? Method::kSampled : Method::kOurs,
               (i * 37 % 101) / 101.0, i % 3 == 0);
    if (r.method == Method::kOurs) {
      r.uncertainty = 0.123456789;
      r.sample_counts = {{"B", 7}, {"A", 3}};
      FidelityChain chain{r.item_id, "B", {"B", "A"}, false, false};
      r.chains = {{chain, 0.7}};
      r.flags = {std::string(flags::kMismatch)};
    }
    rs.push_back(QuantizeRecord(r));
  }
  return rs;
}

TEST(ReportTest, WriteThenReadIsIdentity) {
  testing::TempDir dir;
  const auto records = FiftyRecords();
  WriteRun(records, Header(), dir / "run.jsonl");
  const RunFile run = ReadRun(dir / "run.jsonl");
  EXPECT_EQ(run.header, Header());
  EXPECT_EQ(run.records, records);
  EXPECT_EQ(SerializeRun(run.header, run.records), ReadTextFile(dir / "run.jsonl"));
}

TEST(ReportTest, GroupsInterleavedMethods) {
  const auto groups = GroupByMethod(FiftyRecords());
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups.at(Method::kOurs).size(), 25u);
  EXPECT_EQ(groups.at(Method::kSampled).size(), 25u);
}

TEST(ReportTest, UnwritablePathNamesIt) {
  testing::TempDir dir;
  const auto path = dir / "missing" / "run.jsonl";
  try {
    WriteRun(FiftyRecords(), Header(), path);
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
}

TEST(ReportTest, ParseErrors) {
  const std::string text = SerializeRun(Header(), FiftyRecords());
  {
    std::istringstream in(text.substr(0, text.size() / 2));
    try {
      ParseRun(in);
      FAIL() << "expected an error";
    } catch (const ParseError& e) {
      EXPECT_GT(e.line(), 1);
    }
  }
  {
    std::string other = text;
    other.replace(other.find("fidelius.run/1"), 14, "fidelius.run/9");
    std::istringstream in(other);
    EXPECT_THROW(ParseRun(in), ParseError);
  }
  {
    const std::string first_line = text.substr(0, text.find('\n') + 1);
    std::istringstream in(first_line + first_line);
    EXPECT_THROW(ParseRun(in), ParseError);
  }
  {
    std::istringstream in(text.substr(text.find('\n') + 1));
    EXPECT_THROW(ParseRun(in), ParseError);
  }
}

ReliabilityDiagram OneBin() {
  std::vector<ConfidenceRecord> rs(4, Record("q", Method::kOurs, 0.65, true));
  return BinRecords(rs, 10);
}

int CountLines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

TEST(ReportTest, DiagramCsv) {
  const std::string csv = DiagramCsv(OneBin());
  EXPECT_EQ(CountLines(csv), 11);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_lo,bin_hi,count,density,mean_conf,accuracy");
  int zero_rows = 0;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.find(",0,0,0,0") != std::string::npos) ++zero_rows;
  }
  EXPECT_EQ(zero_rows, 9);
}

double DensitySum(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  double total = 0.0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    total += std::stod(cells.at(3));
  }
  return total;
}

TEST(ReportTest, DensitiesSumToOne) {
  for (int n : {1, 3, 7, 11, 13, 97, 331, 499}) {
    std::vector<ConfidenceRecord> rs;
    for (int i = 0; i < n; ++i) {
      rs.push_back(Record("q", Method::kOurs, (i * 7919 % 1000) / 1000.0, i % 2));
    }
    EXPECT_NEAR(DensitySum(DiagramCsv(BinRecords(rs, 10))), 1.0, 1e-12) << n;
  }
}

TEST(ReportTest, CalibratedDiagramSitsOnIdentity) {
  std::vector<ConfidenceRecord> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(Record("q", Method::kOurs, 0.25, i == 0));
  for (int i = 0; i < 4; ++i) rs.push_back(Record("q", Method::kOurs, 0.75, i != 0));
  const ReliabilityDiagram d = BinRecords(rs, 10);
  for (const auto& bin : d.bins) {
    if (bin.count > 0) {
      EXPECT_DOUBLE_EQ(bin.accuracy, bin.mean_conf);
    }
  }
}

TEST(ReportTest, SvgIsDeterministic) {
  const std::string a = DiagramSvg(OneBin(), "t");
  EXPECT_EQ(a, DiagramSvg(OneBin(), "t"));
  EXPECT_NE(a.find("viewBox=\"0 0 640.000000 480.000000\""), std::string::npos);
  testing::TempDir dir;
  RenderDiagram(OneBin(), dir / "d");
  EXPECT_TRUE(std::filesystem::exists(dir / "d.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "d.svg"));
}

MetricReport Report(Method m, double ece, double acc) {
  MetricReport r;
  r.method = m;
  r.ece = ece;
  r.ipr = 0.1;
  r.ce = acc / 2;
  r.accuracy = acc;
  return r;
}

TEST(ReportTest, CompareTable) {
  const std::vector<MetricReport> one = {Report(Method::kOurs, 0.1, 0.5)};
  const ComparisonTable single = CompareTable(one);
  EXPECT_EQ(CountLines(single.csv), 2);

  const std::vector<MetricReport> tied = {Report(Method::kOurs, 0.1, 0.5),
                                          Report(Method::kVerb, 0.1, 0.7)};
  const ComparisonTable table = CompareTable(tied);
  std::istringstream in(table.text);
  std::string header, ours, verb;
  std::getline(in, header);
  std::getline(in, ours);
  std::getline(in, verb);
  EXPECT_NE(ours.find("0.1000*"), std::string::npos);
  EXPECT_NE(verb.find("0.1000*"), std::string::npos);
  EXPECT_NE(verb.find("0.7000*"), std::string::npos);
  EXPECT_EQ(ours.find("0.5000*"), std::string::npos);
  EXPECT_THROW(CompareTable({}), ValidationError);
}

}  // namespace
}  // namespace fidelius
