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

#include "fidelius/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "fidelius/baselines.h"
#include "fidelius/cache.h"
#include "fidelius/errors.h"
#include "fidelius/http_backend.h"
#include "fidelius/log.h"
#include "fidelius/mock_backend.h"
#include "fidelius/sampler.h"
#include "fidelius/serialize.h"

namespace fidelius {
namespace {

[[noreturn]] void FieldError(std::string_view field, const std::string& message) {
  throw ConfigError(fmt::format("config field '{}': {}", field, message));
}

template <typename T>
void Read(const nlohmann::json& json, std::string_view field, const char* key, T& out) {
  auto it = json.find(key);
  if (it == json.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    FieldError(field, fmt::format("wrong type ({})", it->type_name()));
  }
}

void CheckKeys(const nlohmann::json& json, std::string_view where,
               std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : json.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      FieldError(where.empty() ? key : fmt::format("{}.{}", where, key), "unknown key");
    }
  }
}

std::string ResolvePath(const std::string& path, const std::filesystem::path& base) {
  if (path.empty() || base.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (base / p).lexically_normal().string();
}

std::string UtcNow() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool Contains(std::span<const Method> methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

DecodeParams GreedyParams(const RunConfig& config) {
  DecodeParams params = DecodeParams::Greedy();
  params.seed = config.seed;
  return params;
}

std::string MetricRow(std::string_view lead, const MetricReport& r) {
  return fmt::format("{:<12} {:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}\n", lead,
                     MethodName(r.method), FormatFixed(r.ece, 4), FormatFixed(r.ipr, 4),
                     FormatFixed(r.ce, 4), FormatFixed(r.brier, 4),
                     FormatFixed(r.accuracy, 4), r.usable_count);
}

std::string MetricHeader(std::string_view lead) {
  return fmt::format("{:<12} {:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}\n", lead, "method",
                     "ECE", "IPR", "CE", "Brier", "Acc", "n");
}

}  // namespace

void RunConfig::Validate() const {
  if (dataset.empty()) FieldError("dataset", "must be set");
  if (backend.kind != "mock" && backend.kind != "http") {
    FieldError("backend.kind", fmt::format("must be 'mock' or 'http' (got '{}')", backend.kind));
  }
  if (backend.kind == "mock" && backend.mock_spec.empty()) {
    FieldError("backend.mock_spec", "required for the mock backend");
  }
  if (backend.kind == "http") {
    if (backend.base_url.empty()) FieldError("backend.base_url", "required for http");
    if (backend.model.empty()) FieldError("backend.model", "required for http");
    if (backend.max_tokens < 1) FieldError("backend.max_tokens", "must be >= 1");
    if (backend.top_logprobs < 1) FieldError("backend.top_logprobs", "must be >= 1");
    if (backend.max_retries < 0) FieldError("backend.max_retries", "must be >= 0");
  }
  if (methods.empty()) FieldError("methods", "at least one method is required");
  std::set<Method> seen;
  for (Method m : methods) {
    if (!seen.insert(m).second) {
      FieldError("methods", fmt::format("'{}' listed twice", MethodName(m)));
    }
  }
  if (k < 1) FieldError("k", fmt::format("must be >= 1 (got {})", k));
  if (!(tau > 1.0)) FieldError("tau", fmt::format("must be > 1 (got {})", tau));
  if (bins < 2) FieldError("bins", fmt::format("must be >= 2 (got {})", bins));
  if (!(temperature >= 0.0)) {
    FieldError("temperature", fmt::format("must be >= 0 (got {})", temperature));
  }
  if ((NeedsSampling(methods) || Contains(methods, Method::kToken)) && !(temperature > 0.0)) {
    FieldError("temperature",
               fmt::format("must be > 0 for sampling methods (got {})", temperature));
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    FieldError("top_p", fmt::format("must be in (0, 1] (got {})", top_p));
  }
  if (concurrency < 1) FieldError("concurrency", "must be >= 1");
  if (output_dir.empty()) FieldError("output_dir", "must be set");
}

RunConfig RunConfig::FromJson(const nlohmann::json& json, const std::filesystem::path& base) {
  if (!json.is_object()) throw ConfigError("config must be a JSON object");
  CheckKeys(json, "",
            {"dataset", "backend", "methods", "k", "tau", "temperature", "top_p", "bins",
             "seed", "cache_dir", "output_dir", "concurrency", "timestamp"});
  RunConfig config;
  Read(json, "dataset", "dataset", config.dataset);
  if (auto it = json.find("backend"); it != json.end() && !it->is_null()) {
    if (!it->is_object()) FieldError("backend", "must be an object");
    CheckKeys(*it, "backend",
              {"kind", "mock_spec", "base_url", "model", "supports_logprobs", "max_tokens",
               "top_logprobs", "max_retries"});
    BackendSettings& b = config.backend;
    Read(*it, "backend.kind", "kind", b.kind);
    Read(*it, "backend.mock_spec", "mock_spec", b.mock_spec);
    Read(*it, "backend.base_url", "base_url", b.base_url);
    Read(*it, "backend.model", "model", b.model);
    Read(*it, "backend.supports_logprobs", "supports_logprobs", b.supports_logprobs);
    Read(*it, "backend.max_tokens", "max_tokens", b.max_tokens);
    Read(*it, "backend.top_logprobs", "top_logprobs", b.top_logprobs);
    Read(*it, "backend.max_retries", "max_retries", b.max_retries);
  }
  std::vector<std::string> names;
  Read(json, "methods", "methods", names);
  for (const auto& name : names) {
    auto m = MethodFromName(name);
    if (!m) FieldError("methods", fmt::format("unknown method '{}'", name));
    config.methods.push_back(*m);
  }
  Read(json, "k", "k", config.k);
  Read(json, "tau", "tau", config.tau);
  Read(json, "temperature", "temperature", config.temperature);
  Read(json, "top_p", "top_p", config.top_p);
  Read(json, "bins", "bins", config.bins);
  Read(json, "seed", "seed", config.seed);
  Read(json, "cache_dir", "cache_dir", config.cache_dir);
  Read(json, "output_dir", "output_dir", config.output_dir);
  Read(json, "concurrency", "concurrency", config.concurrency);
  Read(json, "timestamp", "timestamp", config.timestamp);

  config.dataset = ResolvePath(config.dataset, base);
  config.backend.mock_spec = ResolvePath(config.backend.mock_spec, base);
  config.cache_dir = ResolvePath(config.cache_dir, base);
  config.output_dir = ResolvePath(config.output_dir, base);
  return config;
}

nlohmann::ordered_json RunConfig::ToJson() const {
  nlohmann::ordered_json b;
  b["kind"] = backend.kind;
  if (backend.kind == "mock") {
    b["mock_spec"] = backend.mock_spec;
  } else {
    b["base_url"] = backend.base_url;
    b["model"] = backend.model;
    b["supports_logprobs"] = backend.supports_logprobs;
    b["max_tokens"] = backend.max_tokens;
    b["top_logprobs"] = backend.top_logprobs;
    b["max_retries"] = backend.max_retries;
  }
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["backend"] = b;
  auto& m = j["methods"] = nlohmann::ordered_json::array();
  for (Method method : methods) m.push_back(std::string(MethodName(method)));
  j["k"] = k;
  j["tau"] = tau;
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["bins"] = bins;
  j["seed"] = seed;
  j["cache_dir"] = cache_dir;
  j["output_dir"] = output_dir;
  j["concurrency"] = concurrency;
  j["timestamp"] = timestamp;
  return j;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return RunConfig::FromJson(json, path.parent_path());
}

bool NeedsSampling(std::span<const Method> methods) {
  return std::any_of(methods.begin(), methods.end(),
                     [](Method m) { return IsOursVariant(m) || m == Method::kSampled; });
}

DecodeParams SamplingParams(const RunConfig& config) {
  DecodeParams params;
  params.temperature = config.temperature;
  params.top_p = config.top_p;
  params.mode = DecodeMode::kSample;
  params.seed = config.seed;
  return params;
}

std::shared_ptr<Backend> MakeBackend(const RunConfig& config) {
  std::shared_ptr<Backend> backend;
  if (config.backend.kind == "mock") {
    backend = MockFromSpec(LoadMockSpec(config.backend.mock_spec));
  } else {
    HttpBackendConfig http;
    http.base_url = config.backend.base_url;
    http.model = config.backend.model;
    http.api_key = ApiKeyFromEnv();
    http.max_tokens = config.backend.max_tokens;
    http.top_logprobs = config.backend.top_logprobs;
    http.supports_logprobs = config.backend.supports_logprobs;
    http.max_retries = config.backend.max_retries;
    if (http.api_key.empty()) Warn(fmt::format("{} is not set", kApiKeyEnv));
    backend = std::make_shared<HttpBackend>(std::move(http));
  }
  if (!config.cache_dir.empty()) backend = Cached(std::move(backend), config.cache_dir);
  return backend;
}

RunHeader MakeHeader(const RunConfig& config, const QuestionSet& questions,
                     const Backend& backend) {
  RunHeader header;
  header.backend_id = backend.id();
  header.model = backend.model();
  header.dataset = questions.name;
  header.k = config.k;
  header.tau = Round12(config.tau);
  header.temperature = Round12(config.temperature);
  header.top_p = Round12(config.top_p);
  header.bins = config.bins;
  header.seed = config.seed;
  if (!config.timestamp.empty()) {
    header.timestamp = config.timestamp;
  } else {
    header.timestamp = config.backend.kind == "mock" ? kMockTimestamp : UtcNow();
  }
  for (Method m : config.methods) header.methods.emplace_back(MethodName(m));
  return header;
}

void ParallelFor(int n, int concurrency, const std::function<void(int)>& fn,
                 std::vector<char>* done) {
  if (done) done->assign(static_cast<size_t>(std::max(n, 0)), 0);
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    while (!stop.load()) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
        if (done) (*done)[i] = 1;
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        stop = true;
        return;
      }
    }
  };
  const int threads = std::clamp(concurrency, 1, std::max(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first) std::rethrow_exception(first);
}

ReportSet ComputeReports(std::span<const ConfidenceRecord> records,
                         std::span<const Method> methods, int bins) {
  ReportSet set;
  for (Method m : methods) {
    std::vector<ConfidenceRecord> subset;
    for (const auto& r : records) {
      if (r.method == m) subset.push_back(r);
    }
    const bool any_usable = std::any_of(subset.begin(), subset.end(),
                                        [](const ConfidenceRecord& r) { return r.usable(); });
    if (!any_usable) {
      Warn(fmt::format("method '{}': no usable records, no metrics", MethodName(m)));
      continue;
    }
    set.reports.push_back(Evaluate(subset, m, bins));
    set.diagrams.emplace_back(m, BinRecords(subset, bins));
  }
  return set;
}

void WriteReports(const ReportSet& set, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& report : set.reports) {
    WriteTextFile(out_dir / fmt::format("metrics_{}.json", MethodName(report.method)),
                  DumpLine(ReportToJson(report)) + "\n");
  }
  for (const auto& [method, diagram] : set.diagrams) {
    RenderDiagram(diagram, out_dir / fmt::format("diagram_{}", MethodName(method)),
                  fmt::format("Reliability diagram: {}", MethodName(method)));
  }
  if (!set.reports.empty()) {
    const ComparisonTable table = CompareTable(set.reports);
    WriteTextFile(out_dir / "compare.txt", table.text);
    WriteTextFile(out_dir / "compare.csv", table.csv);
  }
}

int RunOutcome::unusable_count() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [](const ConfidenceRecord& r) { return !r.usable(); }));
}

int RunOutcome::exit_code() const {
  if (fatal_error) return 1;
  return unusable_count() > 0 ? 2 : 0;
}

std::vector<ConfidenceRecord> RunItem(const McqaItem& item, const RunConfig& config,
                                      Backend& backend, ChainMemo* memo) {
  const std::span<const Method> methods = config.methods;
  const bool any_ours = std::any_of(methods.begin(), methods.end(), IsOursVariant);
  ItemTrace trace;
  if (any_ours) {
    trace = TraceItem(item, backend, config.k, SamplingParams(config), memo);
  } else if (Contains(methods, Method::kSampled)) {
    trace.dist = SampleAnswers(item, backend, config.k, SamplingParams(config));
  }
  std::vector<ConfidenceRecord> records;
  for (Method m : methods) {
    ConfidenceRecord record;
    switch (m) {
      case Method::kOurs:
      case Method::kOursNoU:
      case Method::kOursNoF:
        record = ScoreOurs(item, trace, config.tau, m);
        break;
      case Method::kSampled:
        record = RunSampled(item, trace.dist);
        break;
      case Method::kVerb:
        record = RunVerb(item, backend, GreedyParams(config));
        break;
      case Method::kLing:
        record = RunLing(item, backend, GreedyParams(config));
        break;
      case Method::kToken:
        record = RunToken(item, backend, config.temperature);
        break;
    }
    records.push_back(QuantizeRecord(std::move(record)));
  }
  return records;
}

RunOutcome RunExperiment(const RunConfig& config, const QuestionSet& questions,
                         Backend& backend, ChainMemo* memo) {
  config.Validate();
  RunOutcome outcome;
  outcome.header = MakeHeader(config, questions, backend);
  const int n = static_cast<int>(questions.items.size());
  std::vector<std::vector<ConfidenceRecord>> per_item(n);
  std::vector<char> done;
  try {
    ParallelFor(
        n, config.concurrency,
        [&](int i) { per_item[i] = RunItem(questions.items[i], config, backend, memo); },
        &done);
  } catch (const Error& e) {
    outcome.fatal_error = e.what();
  }
  for (int i = 0; i < n; ++i) {
    if (!done[i]) continue;
    for (auto& r : per_item[i]) outcome.records.push_back(std::move(r));
  }
  outcome.reports = ComputeReports(outcome.records, config.methods, config.bins);
  return outcome;
}

void WriteOutcome(const RunOutcome& outcome, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  WriteRun(outcome.records, outcome.header, out_dir / "run.jsonl");
  WriteReports(outcome.reports, out_dir);
}

ReportSet RecomputeReports(const RunFile& run, int bins) {
  std::vector<Method> methods;
  for (const auto& name : run.header.methods) {
    auto m = MethodFromName(name);
    if (!m) throw ValidationError(fmt::format("run header: unknown method '{}'", name));
    methods.push_back(*m);
  }
  return ComputeReports(run.records, methods, bins);
}

TauSweep SweepTau(const RunConfig& config, const QuestionSet& questions, Backend& backend,
                  std::span<const double> taus) {
  if (taus.empty()) FieldError("taus", "at least one value is required");
  for (double tau : taus) {
    if (!(tau > 1.0)) FieldError("taus", fmt::format("each value must be > 1 (got {})", tau));
  }
  config.Validate();
  std::vector<Method> variants;
  for (Method m : config.methods) {
    if (m == Method::kOurs || m == Method::kOursNoU) variants.push_back(m);
  }
  if (variants.empty()) variants.push_back(Method::kOurs);

  TauSweep sweep;
  const int n = static_cast<int>(questions.items.size());
  std::vector<ItemTrace> traces(n);
  std::vector<char> done;
  try {
    ParallelFor(
        n, config.concurrency,
        [&](int i) {
          traces[i] = TraceItem(questions.items[i], backend, config.k, SamplingParams(config));
        },
        &done);
  } catch (const Error& e) {
    sweep.fatal_error = e.what();
  }
  for (double tau : taus) {
    for (Method variant : variants) {
      std::vector<ConfidenceRecord> records;
      for (int i = 0; i < n; ++i) {
        if (!done[i]) continue;
        records.push_back(QuantizeRecord(ScoreOurs(questions.items[i], traces[i], tau, variant)));
      }
      sweep.rows.push_back({tau, Evaluate(records, variant, config.bins)});
    }
  }
  return sweep;
}

std::string TauSweepTable(const TauSweep& sweep) {
  std::string out = MetricHeader("tau");
  for (const auto& row : sweep.rows) out += MetricRow(FormatReal(row.tau), row.report);
  return out;
}

TemperatureSweep SweepTemperature(const RunConfig& config, const QuestionSet& questions,
                                  Backend& backend, std::span<const double> temps,
                                  ChainMemo* memo) {
  if (temps.empty()) FieldError("temps", "at least one value is required");
  for (double t : temps) {
    if (!(t > 0.0)) FieldError("temps", fmt::format("each value must be > 0 (got {})", t));
  }
  ChainMemo local;
  if (!memo) memo = &local;
  TemperatureSweep sweep;
  for (double t : temps) {
    RunConfig at = config;
    at.temperature = t;
    RunOutcome outcome = RunExperiment(at, questions, backend, memo);
    sweep.runs.push_back({t, std::move(outcome.reports.reports), std::move(outcome.records)});
    if (outcome.fatal_error) {
      sweep.fatal_error = outcome.fatal_error;
      break;
    }
  }
  return sweep;
}

std::string TemperatureSweepTable(const TemperatureSweep& sweep) {
  std::string out = MetricHeader("temperature");
  for (const auto& run : sweep.runs) {
    for (const auto& report : run.reports) out += MetricRow(FormatReal(run.temperature), report);
  }
  return out;
}

CallEstimate EstimateCalls(const RunConfig& config, const QuestionSet& questions) {
  CallEstimate estimate;
  estimate.items = static_cast<long>(questions.items.size());
  const std::span<const Method> methods = config.methods;
  if (NeedsSampling(methods)) estimate.sampling = config.k * estimate.items;
  if (std::any_of(methods.begin(), methods.end(), IsOursVariant)) {
    for (const auto& item : questions.items) {
      const long m = item.option_count();
      estimate.chain_max += m * m;
    }
  }
  const long singles = std::count_if(methods.begin(), methods.end(), [](Method m) {
    return m == Method::kVerb || m == Method::kLing || m == Method::kToken;
  });
  estimate.single = singles * estimate.items;
  return estimate;
}

std::string FormatEstimate(const CallEstimate& e) {
  return fmt::format(
      "items:            {}\n"
      "sampling calls:   {}\n"
      "chain calls (max): {}\n"
      "single calls:     {}\n"
      "total (max):      {}\n",
      e.items, e.sampling, e.chain_max, e.single, e.total());
}

}  // namespace fidelius
