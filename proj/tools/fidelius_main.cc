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

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fidelius/cache.h"
#include "fidelius/dataset.h"
#include "fidelius/errors.h"
#include "fidelius/experiment.h"
#include "fidelius/fixtures.h"
#include "fidelius/metrics.h"
#include "fidelius/mock_backend.h"
#include "fidelius/report.h"
#include "fidelius/serialize.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace fidelius;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> dataset;
  std::optional<std::string> backend;
  std::optional<std::string> mock_spec;
  std::optional<std::string> base_url;
  std::optional<std::string> model;
  std::optional<std::string> methods;
  std::optional<int> k;
  std::optional<double> tau;
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<int> bins;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cache_dir;
  std::optional<std::string> output_dir;
  std::optional<int> concurrency;
  std::optional<std::string> timestamp;
  bool no_logprobs = false;
};

void AddConfigOptions(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--dataset", o.dataset, "question set (.jsonl)");
  cmd->add_option("--backend", o.backend, "mock or http");
  cmd->add_option("--mock-spec", o.mock_spec, "mock model spec (.json)");
  cmd->add_option("--base-url", o.base_url, "chat completions base URL");
  cmd->add_option("--model", o.model, "model name");
  cmd->add_option("--methods", o.methods,
                  "comma-separated: ours,ours-no-u,ours-no-f,verb,ling,sampled,token");
  cmd->add_option("-k,--samples", o.k, "samples per item");
  cmd->add_option("--tau", o.tau, "chain weight base");
  cmd->add_option("--temperature", o.temperature, "sampling temperature");
  cmd->add_option("--top-p", o.top_p, "nucleus mass");
  cmd->add_option("--bins", o.bins, "calibration bins");
  cmd->add_option("--seed", o.seed, "seed");
  cmd->add_option("--cache-dir", o.cache_dir, "response cache directory");
  cmd->add_option("-o,--output-dir", o.output_dir, "output directory");
  cmd->add_option("--concurrency", o.concurrency, "items in flight");
  cmd->add_option("--timestamp", o.timestamp, "timestamp recorded in the run header");
  cmd->add_flag("--no-logprobs", o.no_logprobs, "the http backend has no logprobs");
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto b = part.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = part.find_last_not_of(" \t");
    out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> ParseDoubles(const std::string& field, const std::string& text) {
  std::vector<double> out;
  for (const auto& part : SplitList(text)) {
    try {
      size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("config field '{}': bad number '{}'", field, part));
    }
  }
  return out;
}

RunConfig ResolveConfig(const Overrides& o) {
  RunConfig config;
  if (!o.config_path.empty()) config = LoadRunConfig(o.config_path);
  if (o.dataset) config.dataset = *o.dataset;
  if (o.backend) config.backend.kind = *o.backend;
  if (o.mock_spec) config.backend.mock_spec = *o.mock_spec;
  if (o.base_url) config.backend.base_url = *o.base_url;
  if (o.model) config.backend.model = *o.model;
  if (o.no_logprobs) config.backend.supports_logprobs = false;
  if (o.methods) {
    config.methods.clear();
    for (const auto& name : SplitList(*o.methods)) {
      auto m = MethodFromName(name);
      if (!m) throw ConfigError(fmt::format("config field 'methods': unknown method '{}'", name));
      config.methods.push_back(*m);
    }
  }
  if (o.k) config.k = *o.k;
  if (o.tau) config.tau = *o.tau;
  if (o.temperature) config.temperature = *o.temperature;
  if (o.top_p) config.top_p = *o.top_p;
  if (o.bins) config.bins = *o.bins;
  if (o.seed) config.seed = *o.seed;
  if (o.cache_dir) config.cache_dir = *o.cache_dir;
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.concurrency) config.concurrency = *o.concurrency;
  if (o.timestamp) config.timestamp = *o.timestamp;
  config.Validate();
  return config;
}

void PrintCacheStats(const Backend& backend) {
  if (const auto* cached = dynamic_cast<const CachedBackend*>(&backend)) {
    std::cerr << fmt::format("cache: {} hits, {} misses\n", cached->hits(), cached->misses());
  }
}

void PrintGuard(const RunConfig& config, const QuestionSet& questions) {
  if (config.backend.kind != "http") return;
  std::cerr << "estimated backend calls:\n" << FormatEstimate(EstimateCalls(config, questions));
}

int CmdRun(const Overrides& o) {
  const RunConfig config = ResolveConfig(o);
  const QuestionSet questions = LoadQuestionSet(config.dataset);
  PrintGuard(config, questions);
  auto backend = MakeBackend(config);
  const RunOutcome outcome = RunExperiment(config, questions, *backend);
  WriteOutcome(outcome, config.output_dir);
  if (!outcome.reports.reports.empty()) {
    std::cout << CompareTable(outcome.reports.reports).text;
  }
  PrintCacheStats(*backend);
  if (outcome.fatal_error) {
    std::cerr << "error: " << *outcome.fatal_error << "\n";
    std::cerr << fmt::format("partial output ({} records) in {}\n", outcome.records.size(),
                             config.output_dir);
  } else if (const int unusable = outcome.unusable_count(); unusable > 0) {
    std::cerr << fmt::format("{} unusable records\n", unusable);
  }
  return outcome.exit_code();
}

int CmdDryRun(const Overrides& o) {
  const RunConfig config = ResolveConfig(o);
  const QuestionSet questions = LoadQuestionSet(config.dataset);
  std::cout << FormatEstimate(EstimateCalls(config, questions));
  return 0;
}

int CmdMetrics(const std::string& run_path, std::optional<int> bins,
               const std::optional<std::string>& out_dir) {
  const RunFile run = ReadRun(run_path);
  const ReportSet set = RecomputeReports(run, bins.value_or(run.header.bins));
  for (const auto& report : set.reports) std::cout << DumpLine(ReportToJson(report)) << "\n";
  if (out_dir) WriteReports(set, *out_dir);
  return 0;
}

int CmdDiagram(const std::string& run_path, const std::string& method_name,
               std::optional<int> bins, const std::string& out_base) {
  const RunFile run = ReadRun(run_path);
  const auto method = MethodFromName(method_name);
  if (!method) throw ConfigError(fmt::format("unknown method '{}'", method_name));
  std::vector<ConfidenceRecord> subset;
  for (const auto& r : run.records) {
    if (r.method == *method) subset.push_back(r);
  }
  const ReliabilityDiagram diagram = BinRecords(subset, bins.value_or(run.header.bins));
  const fs::path base(out_base);
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  RenderDiagram(diagram, base, fmt::format("Reliability diagram: {}", method_name));
  std::cout << DiagramCsv(diagram);
  return 0;
}

int CmdSweepTau(const Overrides& o, const std::string& taus_text) {
  const RunConfig config = ResolveConfig(o);
  const std::vector<double> taus = ParseDoubles("taus", taus_text);
  const QuestionSet questions = LoadQuestionSet(config.dataset);
  PrintGuard(config, questions);
  auto backend = MakeBackend(config);
  const TauSweep sweep = SweepTau(config, questions, *backend, taus);
  const std::string table = TauSweepTable(sweep);
  std::cout << table;
  fs::create_directories(config.output_dir);
  WriteTextFile(fs::path(config.output_dir) / "tau_sweep.txt", table);
  PrintCacheStats(*backend);
  if (sweep.fatal_error) {
    std::cerr << "error: " << *sweep.fatal_error << "\n";
    return 1;
  }
  return 0;
}

int CmdSweepTemp(const Overrides& o, const std::string& temps_text) {
  const RunConfig config = ResolveConfig(o);
  const std::vector<double> temps = ParseDoubles("temps", temps_text);
  const QuestionSet questions = LoadQuestionSet(config.dataset);
  PrintGuard(config, questions);
  auto backend = MakeBackend(config);
  const TemperatureSweep sweep = SweepTemperature(config, questions, *backend, temps);
  const std::string table = TemperatureSweepTable(sweep);
  std::cout << table;
  fs::create_directories(config.output_dir);
  WriteTextFile(fs::path(config.output_dir) / "temperature_sweep.txt", table);
  for (const auto& run : sweep.runs) {
    RunConfig at = config;
    at.temperature = run.temperature;
    const fs::path dir = fs::path(config.output_dir) / fmt::format("t{}", run.temperature);
    fs::create_directories(dir);
    WriteRun(run.records, MakeHeader(at, questions, *backend), dir / "run.jsonl");
  }
  PrintCacheStats(*backend);
  if (sweep.fatal_error) {
    std::cerr << "error: " << *sweep.fatal_error << "\n";
    return 1;
  }
  return 0;
}

void WriteSuite(const SyntheticSuite& suite, const fs::path& dir, const std::string& stem,
                const std::vector<std::string>& methods, std::uint64_t seed) {
  WriteQuestionSet(suite.questions, dir / (stem + ".jsonl"));
  WriteMockSpec(suite.mock, dir / (stem + ".mock.json"));
  nlohmann::ordered_json config;
  config["dataset"] = stem + ".jsonl";
  config["backend"] = {{"kind", "mock"}, {"mock_spec", stem + ".mock.json"}};
  config["methods"] = methods;
  config["k"] = kDefaultSamples;
  config["tau"] = kDefaultTau;
  config["temperature"] = 1.0;
  config["top_p"] = 1.0;
  config["bins"] = kDefaultBins;
  config["seed"] = seed;
  config["output_dir"] = "../out/" + stem;
  WriteTextFile(dir / (stem + ".config.json"), config.dump(2) + "\n");
  std::cout << fmt::format("wrote {} ({} items)\n", (dir / (stem + ".jsonl")).string(),
                           suite.questions.items.size());
}

int CmdFixtures(const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  WriteSuite(MakeSyntheticSmall(), dir, "synthetic_small",
             {"ours", "ours-no-u", "ours-no-f", "verb", "ling", "sampled", "token"}, 7);
  WriteSuite(MakeDesignedSuite(), dir, "designed_calibration", {"ours", "sampled"}, 7);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated confidence for multiple-choice answers"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run methods over a question set");
  AddConfigOptions(run, run_opts);

  Overrides dry_opts;
  auto* dry = app.add_subcommand("dry-run", "print the estimated number of backend calls");
  AddConfigOptions(dry, dry_opts);

  std::string metrics_run;
  std::optional<int> metrics_bins;
  std::optional<std::string> metrics_out;
  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a run file");
  metrics->add_option("run", metrics_run, "run file (.jsonl)")->required();
  metrics->add_option("--bins", metrics_bins, "calibration bins (default: from the run)");
  metrics->add_option("-o,--output-dir", metrics_out, "write reports and diagrams here");

  std::string diagram_run;
  std::string diagram_method = "ours";
  std::optional<int> diagram_bins;
  std::string diagram_out = "diagram";
  auto* diagram = app.add_subcommand("diagram", "render a reliability diagram");
  diagram->add_option("run", diagram_run, "run file (.jsonl)")->required();
  diagram->add_option("-m,--method", diagram_method, "method")->capture_default_str();
  diagram->add_option("--bins", diagram_bins, "calibration bins (default: from the run)");
  diagram->add_option("-o,--output", diagram_out, "output path without extension")
      ->capture_default_str();

  Overrides tau_opts;
  std::string taus = "1.5,2,2.5,3,4,5";
  auto* sweep_tau = app.add_subcommand("sweep-tau", "rescore the same chains for several tau");
  AddConfigOptions(sweep_tau, tau_opts);
  sweep_tau->add_option("--taus", taus, "comma-separated tau values")->capture_default_str();

  Overrides temp_opts;
  std::string temps = "0.1,0.5,1.0,1.5";
  auto* sweep_temp = app.add_subcommand("sweep-temp", "rerun methods at several temperatures");
  AddConfigOptions(sweep_temp, temp_opts);
  sweep_temp->add_option("--temps", temps, "comma-separated temperatures")
      ->capture_default_str();

  std::string fixtures_dir = "fixtures";
  auto* fixtures = app.add_subcommand("fixtures", "regenerate the synthetic fixtures");
  fixtures->add_option("-o,--output-dir", fixtures_dir, "output directory")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return CmdRun(run_opts);
    if (*dry) return CmdDryRun(dry_opts);
    if (*metrics) return CmdMetrics(metrics_run, metrics_bins, metrics_out);
    if (*diagram) return CmdDiagram(diagram_run, diagram_method, diagram_bins, diagram_out);
    if (*sweep_tau) return CmdSweepTau(tau_opts, taus);
    if (*sweep_temp) return CmdSweepTemp(temp_opts, temps);
    if (*fixtures) return CmdFixtures(fixtures_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
