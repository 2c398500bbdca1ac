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

#include <algorithm>
#include <fstream>
#include <functional>

#include <fmt/core.h>

#include "fidelius/errors.h"
#include "fidelius/serialize.h"

namespace fidelius {
namespace {

using ojson = nlohmann::ordered_json;

ojson RealMap(const std::map<std::string, double>& values) {
  ojson out = ojson::object();
  for (const auto& [k, v] : values) out[k] = Round12(v);
  return out;
}

template <typename T>
T Get(const nlohmann::json& json, const char* key) {
  try {
    return json.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("field '{}': {}", key, e.what()));
  }
}

}  // namespace

ConfidenceRecord QuantizeRecord(ConfidenceRecord record) {
  record.confidence = Round12(record.confidence);
  for (auto& [label, v] : record.per_answer) v = Round12(v);
  if (record.uncertainty) record.uncertainty = Round12(*record.uncertainty);
  for (auto& chain : record.chains) chain.weight = Round12(chain.weight);
  return record;
}

ojson HeaderToJson(const RunHeader& header) {
  ojson json;
  json["type"] = "header";
  json["schema"] = header.schema;
  json["backend_id"] = header.backend_id;
  json["model"] = header.model;
  json["dataset"] = header.dataset;
  json["k"] = header.k;
  json["tau"] = Round12(header.tau);
  json["temperature"] = Round12(header.temperature);
  json["top_p"] = Round12(header.top_p);
  json["bins"] = header.bins;
  json["seed"] = header.seed;
  json["timestamp"] = header.timestamp;
  json["methods"] = header.methods;
  return json;
}

ojson RecordToJson(const ConfidenceRecord& record) {
  ojson json;
  json["type"] = "record";
  json["item_id"] = record.item_id;
  json["method"] = MethodName(record.method);
  json["chosen"] = record.chosen;
  json["confidence"] = Round12(record.confidence);
  json["per_answer"] = RealMap(record.per_answer);
  json["correct"] = record.correct;
  json["uncertainty"] = record.uncertainty ? ojson(Round12(*record.uncertainty)) : ojson();
  json["flags"] = ojson::array();
  for (const auto& flag : record.flags) json["flags"].push_back(flag);
  if (!record.sample_counts.empty()) {
    json["sample_counts"] = ojson(record.sample_counts);
  }
  if (!record.chains.empty()) {
    auto& chains = json["chains"] = ojson::array();
    for (const auto& [chain, weight] : record.chains) {
      ojson c;
      c["start"] = chain.start;
      c["elements"] = chain.elements;
      c["weight"] = Round12(weight);
      c["terminated_by_sentinel"] = chain.terminated_by_sentinel;
      c["truncated"] = chain.truncated;
      chains.push_back(std::move(c));
    }
  }
  return json;
}

ConfidenceRecord RecordFromJson(const nlohmann::json& json) {
  ConfidenceRecord record;
  record.item_id = Get<std::string>(json, "item_id");
  const auto method_name = Get<std::string>(json, "method");
  auto method = MethodFromName(method_name);
  if (!method) throw ParseError(fmt::format("unknown method '{}'", method_name));
  record.method = *method;
  record.chosen = Get<std::string>(json, "chosen");
  record.confidence = Get<double>(json, "confidence");
  record.per_answer = Get<std::map<std::string, double>>(json, "per_answer");
  record.correct = Get<bool>(json, "correct");
  if (const auto& u = json.at("uncertainty"); !u.is_null()) {
    record.uncertainty = u.get<double>();
  }
  for (const auto& flag : Get<std::vector<std::string>>(json, "flags")) {
    record.flags.insert(flag);
  }
  if (json.contains("sample_counts")) {
    record.sample_counts = Get<std::map<std::string, int>>(json, "sample_counts");
  }
  if (json.contains("chains")) {
    for (const auto& c : json.at("chains")) {
      WeightedChain wc;
      wc.chain.item_id = record.item_id;
      wc.chain.start = Get<std::string>(c, "start");
      wc.chain.elements = Get<std::vector<std::string>>(c, "elements");
      wc.chain.terminated_by_sentinel = Get<bool>(c, "terminated_by_sentinel");
      wc.chain.truncated = Get<bool>(c, "truncated");
      wc.weight = Get<double>(c, "weight");
      record.chains.push_back(std::move(wc));
    }
  }
  if (record.item_id.empty()) throw ParseError("record without item_id");
  return record;
}

std::string SerializeRun(const RunHeader& header,
                         std::span<const ConfidenceRecord> records) {
  std::string out = DumpLine(HeaderToJson(header));
  out += '\n';
  for (const auto& record : records) {
    out += DumpLine(RecordToJson(record));
    out += '\n';
  }
  return out;
}

void WriteRun(std::span<const ConfidenceRecord> records, const RunHeader& header,
              const std::filesystem::path& path) {
  WriteTextFile(path, SerializeRun(header, records));
}

RunFile ParseRun(std::istream& in) {
  RunFile run;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto json = nlohmann::json::parse(line);
      const auto type = Get<std::string>(json, "type");
      if (type == "header") {
        if (have_header) throw ParseError("second header line");
        RunHeader& h = run.header;
        h.schema = Get<std::string>(json, "schema");
        if (h.schema != kRunSchema) {
          throw ParseError(fmt::format("schema '{}' is not supported (expected '{}')",
                                       h.schema, kRunSchema));
        }
        h.backend_id = Get<std::string>(json, "backend_id");
        h.model = Get<std::string>(json, "model");
        h.dataset = Get<std::string>(json, "dataset");
        h.k = Get<int>(json, "k");
        h.tau = Get<double>(json, "tau");
        h.temperature = Get<double>(json, "temperature");
        h.top_p = Get<double>(json, "top_p");
        h.bins = Get<int>(json, "bins");
        h.seed = Get<std::uint64_t>(json, "seed");
        h.timestamp = Get<std::string>(json, "timestamp");
        h.methods = Get<std::vector<std::string>>(json, "methods");
        have_header = true;
      } else if (type == "record") {
        if (!have_header) throw ParseError("record before header");
        run.records.push_back(RecordFromJson(json));
      } else {
        throw ParseError(fmt::format("unknown line type '{}'", type));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("malformed JSON: {}", e.what()), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!have_header) throw ParseError("run file has no header line");
  return run;
}

RunFile ReadRun(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open run file '{}'", path.string()));
  try {
    return ParseRun(in);
  } catch (const ParseError& e) {
    throw e.WithContext(path.string());
  }
}

std::map<Method, std::vector<ConfidenceRecord>> GroupByMethod(
    std::span<const ConfidenceRecord> records) {
  std::map<Method, std::vector<ConfidenceRecord>> out;
  for (const auto& r : records) out[r.method].push_back(r);
  return out;
}

std::string DiagramCsv(const ReliabilityDiagram& diagram) {
  std::string out = "bin_lo,bin_hi,count,density,mean_conf,accuracy\n";
  for (const auto& bin : diagram.bins) {
    const double density = diagram.n > 0 ? static_cast<double>(bin.count) / diagram.n : 0.0;
    out += fmt::format("{},{},{},{},{},{}\n", FormatReal(bin.lo), FormatReal(bin.hi),
                       bin.count, fmt::format("{}", density), FormatReal(bin.mean_conf),
                       FormatReal(bin.accuracy));
  }
  return out;
}

std::string DiagramSvg(const ReliabilityDiagram& diagram, std::string_view title) {
  constexpr double kWidth = 640, kHeight = 480;
  constexpr double kLeft = 70, kRight = 620, kTop = 40, kBottom = 420;
  const double plot_w = kRight - kLeft, plot_h = kBottom - kTop;
  auto f = [](double v) { return FormatFixed(v, 6); };
  auto px = [&](double x) { return kLeft + x * plot_w; };
  auto py = [&](double y) { return kBottom - y * plot_h; };

  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '&': escaped += "&amp;"; break;
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '"': escaped += "&quot;"; break;
      default: escaped += c;
    }
  }

  int max_count = 0;
  for (const auto& bin : diagram.bins) max_count = std::max(max_count, bin.count);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      f(kWidth), f(kHeight));
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
                     f(kWidth), f(kHeight));
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"16\" "
      "text-anchor=\"middle\">{}</text>\n",
      f((kLeft + kRight) / 2), f(kTop / 2 + 6), escaped);

  for (const auto& bin : diagram.bins) {
    if (bin.count == 0) continue;
    const double opacity = static_cast<double>(bin.count) / max_count;
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#1f4e8c\" "
        "fill-opacity=\"{}\" stroke=\"#1f4e8c\" stroke-width=\"1.000000\"/>\n",
        f(px(bin.lo)), f(py(bin.accuracy)), f((bin.hi - bin.lo) * plot_w),
        f(bin.accuracy * plot_h), f(opacity));
  }

  svg += fmt::format(
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#c0392b\" "
      "stroke-width=\"1.500000\" stroke-dasharray=\"6,4\"/>\n",
      f(px(0)), f(py(0)), f(px(1)), f(py(1)));
  svg += fmt::format(
      "<polyline points=\"{},{} {},{} {},{}\" fill=\"none\" stroke=\"#000000\" "
      "stroke-width=\"1.000000\"/>\n",
      f(kLeft), f(kTop), f(kLeft), f(kBottom), f(kRight), f(kBottom));
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"middle\">{}</text>\n",
        f(px(v)), f(kBottom + 18), FormatFixed(v, 1));
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"end\">{}</text>\n",
        f(kLeft - 8), f(py(v) + 4), FormatFixed(v, 1));
  }
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" "
      "text-anchor=\"middle\">Confidence</text>\n",
      f((kLeft + kRight) / 2), f(kHeight - 20));
  svg += fmt::format(
      "<text x=\"{0}\" y=\"{1}\" font-family=\"sans-serif\" font-size=\"14\" "
      "text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\">Accuracy</text>\n",
      f(22), f((kTop + kBottom) / 2));
  svg += "</svg>\n";
  return svg;
}

void RenderDiagram(const ReliabilityDiagram& diagram, const std::filesystem::path& base,
                   std::string_view title) {
  WriteTextFile(base.string() + ".csv", DiagramCsv(diagram));
  WriteTextFile(base.string() + ".svg", DiagramSvg(diagram, title));
}

ComparisonTable CompareTable(std::span<const MetricReport> reports) {
  if (reports.empty()) throw ValidationError("comparison table needs at least one report");

  auto best = [&](auto get, bool lower) {
    double b = get(reports.front());
    for (const auto& r : reports) b = lower ? std::min(b, get(r)) : std::max(b, get(r));
    return b;
  };
  auto ece = [](const MetricReport& r) { return Round12(r.ece); };
  auto ipr = [](const MetricReport& r) { return Round12(r.ipr); };
  auto ce = [](const MetricReport& r) { return Round12(r.ce); };
  auto acc = [](const MetricReport& r) { return Round12(r.accuracy); };
  const double best_ece = best(ece, true), best_ipr = best(ipr, true);
  const double best_ce = best(ce, false), best_acc = best(acc, false);

  ComparisonTable table;
  table.csv = "method,ece,ipr,ce,brier,accuracy,best_ece,best_ipr,best_ce,best_accuracy\n";
  table.text = fmt::format("{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6}\n", "method",
                           fmt::format("ECE_{}", reports.front().bins),
                           fmt::format("IPR_{}", reports.front().bins),
                           fmt::format("CE_{}", reports.front().bins), "Brier", "Acc", "n");
  auto cell = [](double v, bool star) {
    return fmt::format("{:.4f}{}", v, star ? "*" : " ");
  };
  for (const auto& r : reports) {
    const bool e = ece(r) == best_ece, i = ipr(r) == best_ipr;
    const bool c = ce(r) == best_ce, a = acc(r) == best_acc;
    table.text += fmt::format("{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6}\n",
                              MethodName(r.method), cell(r.ece, e), cell(r.ipr, i),
                              cell(r.ce, c), cell(r.brier, false), cell(r.accuracy, a),
                              r.usable_count);
    table.csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", MethodName(r.method),
                             FormatReal(r.ece), FormatReal(r.ipr), FormatReal(r.ce),
                             FormatReal(r.brier), FormatReal(r.accuracy), int(e), int(i),
                             int(c), int(a));
  }
  table.text += "* best in column (lowest ECE/IPR, highest CE/Acc)\n";
  return table;
}

}  // namespace fidelius
