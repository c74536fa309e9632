// layoutprompt command-line driver.
//
// exit codes: 0 ok, 1 run-level failure (some jobs failed), 2 usage or input error

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layoutprompt/ingest.hpp"
#include "layoutprompt/llm_http.hpp"
#include "layoutprompt/noise.hpp"
#include "layoutprompt/pipeline.hpp"
#include "layoutprompt/tokens.hpp"
#include "layoutprompt/verbalize.hpp"

namespace fs = std::filesystem;
namespace lp = layoutprompt;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailed = 1;
constexpr int kInputError = 2;

lp::InputFormat input_format(const std::string& s) {
  if (s == "canonical") return lp::InputFormat::Canonical;
  if (s == "due") return lp::InputFormat::Due;
  return lp::InputFormat::Auto;
}

void emit(const std::string& data, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw lp::IoError("cannot write " + output);
  out << data;
}

// Directories expand to their *.json / *.jsonl files, sorted.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".json" || ext == ".jsonl")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(in)) throw lp::IoError("no such file: " + in);
      out.emplace_back(in);
    }
  }
  return out;
}

std::vector<lp::OcrDocument> load_corpus(const std::vector<std::string>& inputs, lp::InputFormat fmt) {
  std::vector<lp::OcrDocument> docs;
  for (const auto& p : expand_inputs(inputs)) {
    if (p.extension() == ".jsonl") {
      for (auto& d : lp::load_due_all(p)) docs.push_back(std::move(d));
    } else {
      docs.push_back(lp::load_document(p, fmt));
    }
  }
  return docs;
}

lp::NoiseModelId noise_model(const std::string& s) {
  const auto n = lp::parse_noise_model(s);
  if (!n) throw lp::ConfigError("unknown noise model '" + s + "'");
  return *n;
}

lp::VerbalizerId verbalizer_id(const std::string& s) {
  const auto v = lp::parse_verbalizer(s);
  if (!v) throw lp::ConfigError("unknown verbalizer '" + s + "'");
  return *v;
}

struct NoiseFlags {
  std::string model = "none";
  std::uint64_t seed = 0;
  int translate_max = 20;
  std::optional<double> min_char_width;
  std::optional<double> min_char_height;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--noise", model, "NONE, TRANSLATE, SHUFFLE or NEAREST_NEIGHBOR")->capture_default_str();
    cmd->add_option("--seed", seed, "noise seed")->capture_default_str();
    cmd->add_option("--translate-max", translate_max, "max shift per axis for TRANSLATE")->capture_default_str();
    cmd->add_option("--min-char-width", min_char_width, "NEAREST_NEIGHBOR threshold (default: derived)");
    cmd->add_option("--min-char-height", min_char_height, "NEAREST_NEIGHBOR threshold (default: derived)");
  }

  lp::NoiseConfig config() const {
    return {noise_model(model), seed, translate_max, min_char_width, min_char_height};
  }
};

// ---------------------------------------------------------------- verbalize

struct VerbalizeArgs {
  std::string input;
  std::string format = "auto";
  std::string verbalizer = "PlainText";
  bool all = false;
  bool describe = false;
  std::optional<double> char_width;
  std::optional<double> char_height;
  std::string descriptions;
  std::string output;
  NoiseFlags noise;
};

int cmd_verbalize(const VerbalizeArgs& a) {
  auto doc = lp::apply_noise(lp::load_document(a.input, input_format(a.format)), a.noise.config());

  lp::VerbalizeOptions opts;
  if (a.char_width || a.char_height) {
    auto m = lp::derive_char_metrics(doc);
    if (a.char_width) m.char_width = *a.char_width;
    if (a.char_height) m.char_height = *a.char_height;
    if (m.char_width <= 0 || m.char_height <= 0) throw lp::ConfigError("character metrics must be positive");
    opts.metrics = m;
  }
  if (!a.descriptions.empty()) {
    opts.descriptions.merge(lp::detail::parse_json_text(lp::detail::read_file(a.descriptions), a.descriptions));
  }

  std::string out;
  if (a.all) {
    for (auto v : lp::kAllVerbalizers) {
      if (v == lp::VerbalizerId::PlainHTML && !doc.html) continue;
      const auto r = lp::verbalize(doc, v, opts);
      out += "===== " + std::string(lp::to_string(v)) + " =====\n";
      if (a.describe) out += r.format_description + "\n\n";
      out += r.text + "\n";
    }
  } else {
    const auto r = lp::verbalize(doc, verbalizer_id(a.verbalizer), opts);
    if (a.describe) out += r.format_description + "\n\n";
    out += r.text + "\n";
  }
  emit(out, a.output);
  return kOk;
}

// ---------------------------------------------------------------------- run

struct RunArgs {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> pattern;
  std::optional<std::string> backend;
  std::optional<std::string> store;
  std::optional<std::string> model;
  std::vector<std::string> verbalizers;
  std::vector<std::string> noise;
};

int cmd_run(const RunArgs& a) {
  auto cfg = lp::load_pipeline_config(a.config);
  if (a.output_dir) cfg.output_dir = *a.output_dir;
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (a.pattern) {
    const auto p = lp::parse_pattern(*a.pattern);
    if (!p) throw lp::ConfigError("pattern must be A or B");
    cfg.pattern = *p;
  }
  if (a.backend) cfg.backend.kind = *a.backend;
  if (a.store) cfg.backend.store = *a.store;
  if (a.model) cfg.model_id = *a.model;
  if (!a.verbalizers.empty()) {
    cfg.verbalizers.clear();
    for (const auto& v : a.verbalizers) cfg.verbalizers.push_back(verbalizer_id(v));
  }
  if (!a.noise.empty()) {
    cfg.noise_models.clear();
    for (const auto& n : a.noise) cfg.noise_models.push_back(noise_model(n));
  }
  lp::validate(cfg);

  std::unique_ptr<lp::Backend> backend;
  if (cfg.backend.kind == "live") {
    lp::HttpBackendConfig http;
    http.endpoint = cfg.backend.endpoint;
    http.api_key_env = cfg.backend.api_key_env;
    http.timeout = std::chrono::seconds(cfg.backend.timeout_s);
    backend = std::make_unique<lp::HttpChatBackend>(http);
  } else {
    backend = std::make_unique<lp::ReplayBackend>(lp::ReplayStore::load(cfg.backend.store));
  }

  const auto s = lp::run_pipeline(cfg, *backend);
  std::cerr << "jobs " << s.jobs << ", sent " << s.requests_sent << ", reused " << s.responses_reused
            << ", failed " << s.failures << " (config " << s.config_hash << ")\n";
  if (s.failures) {
    std::cerr << "see " << (cfg.output_dir / "errors.jsonl").string() << "\n";
    return kRunFailed;
  }
  return kOk;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string extractions;
  std::string ground_truth;
  std::string metric = "typed";
  std::vector<std::string> dataset_metric;
  bool no_rejection = false;
  std::string output_dir = ".";
};

int cmd_evaluate(const EvaluateArgs& a) {
  lp::EvalOptions opts;
  const auto m = lp::parse_metric(a.metric);
  if (!m) throw lp::ConfigError("unknown metric '" + a.metric + "'");
  opts.metric = *m;
  for (const auto& dm : a.dataset_metric) {
    const auto eq = dm.find('=');
    const auto pm = eq == std::string::npos ? std::nullopt : lp::parse_metric(dm.substr(eq + 1));
    if (!pm) throw lp::ConfigError("--dataset-metric expects NAME=METRIC, got '" + dm + "'");
    opts.dataset_metric[dm.substr(0, eq)] = *pm;
  }
  opts.allow_rejection = !a.no_rejection;

  const auto rep = lp::evaluate_files(a.extractions, a.ground_truth, opts, a.output_dir);
  std::printf("records %zu  mean over datasets %.6f\n", rep.total, rep.mean_over_datasets);
  for (const auto& [name, s] : rep.per_dataset) {
    std::printf("  %-20s %.6f  (%zu)\n", name.c_str(), s.score, s.count);
  }
  return kOk;
}

// ------------------------------------------------------------------- tokens

struct TokensArgs {
  std::vector<std::string> inputs;
  std::string format = "auto";
  std::string counter = "approx";
  std::string counter_cmd;
  std::string output;
};

int cmd_tokens(const TokensArgs& a) {
  const auto docs = load_corpus(a.inputs, input_format(a.format));
  std::unique_ptr<lp::TokenCounter> counter;
  if (a.counter == "approx") {
    counter = std::make_unique<lp::ApproxTokenCounter>();
  } else if (a.counter == "process") {
    if (a.counter_cmd.empty()) throw lp::ConfigError("--counter process needs --counter-cmd");
    counter = std::make_unique<lp::ProcessTokenCounter>(a.counter_cmd);
  } else {
    throw lp::ConfigError("--counter must be approx or process");
  }

  const auto rows = lp::corpus_overhead(docs, *counter);
  std::string csv = "# version=" + std::string(lp::kToolkitVersion) + " counter=" + counter->name() +
                    " documents=" + std::to_string(rows.front().documents) + "\n";
  csv += "verbalizer,mean_ratio,documents,rank\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9f", r.mean_ratio);
    csv += std::string(lp::to_string(r.verbalizer)) + "," + buf + "," + std::to_string(r.documents) + "," +
           std::to_string(r.rank) + "\n";
  }
  emit(csv, a.output);
  return kOk;
}

// -------------------------------------------------------------------- noise

struct NoiseArgs {
  std::string input;
  std::string format = "auto";
  std::string output;
  NoiseFlags noise;
};

int cmd_noise(const NoiseArgs& a) {
  const auto cfg = a.noise.config();
  const auto doc = lp::apply_noise(lp::load_document(a.input, input_format(a.format)), cfg);
  auto j = lp::to_canonical_json(doc);
  j["provenance"] = {{"version", std::string(lp::kToolkitVersion)},
                     {"noise", std::string(lp::to_string(cfg.model))},
                     {"seed", cfg.seed}};
  emit(j.dump(2) + "\n", a.output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layoutprompt: layout-aware prompting for OCR documents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lp::kToolkitVersion));

  VerbalizeArgs va;
  auto* verb = app.add_subcommand("verbalize", "print a document verbalization");
  verb->add_option("input", va.input, "canonical JSON or DUE document")->required();
  verb->add_option("--format", va.format, "auto, canonical or due")->capture_default_str();
  verb->add_option("-v,--verbalizer", va.verbalizer, "verbalization strategy")->capture_default_str();
  verb->add_flag("--all", va.all, "print every strategy under a header");
  verb->add_flag("--describe", va.describe, "prefix the format description");
  verb->add_option("--char-width", va.char_width, "override derived character width");
  verb->add_option("--char-height", va.char_height, "override derived character height");
  verb->add_option("--descriptions", va.descriptions, "JSON file overriding format descriptions");
  verb->add_option("-o,--output", va.output, "output file (default stdout)");
  va.noise.add_to(verb);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run the prompting pipeline from a config file");
  run->add_option("config", ra.config, "pipeline config JSON")->required();
  run->add_option("--output-dir", ra.output_dir, "overrides output_dir");
  run->add_option("--seed", ra.seed, "overrides seed");
  run->add_option("--workers", ra.workers, "overrides workers");
  run->add_option("--pattern", ra.pattern, "overrides pattern (A or B)");
  run->add_option("--backend", ra.backend, "overrides backend.kind (replay or live)");
  run->add_option("--store", ra.store, "overrides backend.store");
  run->add_option("--model", ra.model, "overrides model_id");
  run->add_option("--verbalizer", ra.verbalizers, "overrides verbalizers (repeatable)");
  run->add_option("--noise", ra.noise, "overrides noise models (repeatable)");

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "score extractions against ground truth");
  eval->add_option("extractions", ea.extractions, "extractions.jsonl from a run")->required();
  eval->add_option("ground_truth", ea.ground_truth, "ground-truth JSON")->required();
  eval->add_option("--metric", ea.metric, "typed, accuracy, anls, em or f1")->capture_default_str();
  eval->add_option("--dataset-metric", ea.dataset_metric, "per-dataset metric, NAME=METRIC (repeatable)");
  eval->add_flag("--no-rejection", ea.no_rejection, "an empty answer to an empty ground truth counts as wrong");
  eval->add_option("-o,--output-dir", ea.output_dir, "where report.json and report.csv go")->capture_default_str();

  TokensArgs ta;
  auto* tok = app.add_subcommand("tokens", "per-verbalizer prompt length overhead");
  tok->add_option("inputs", ta.inputs, "documents or directories")->required();
  tok->add_option("--format", ta.format, "auto, canonical or due")->capture_default_str();
  tok->add_option("--counter", ta.counter, "approx or process")->capture_default_str();
  tok->add_option("--counter-cmd", ta.counter_cmd, "tokenizer command for --counter process");
  tok->add_option("-o,--output", ta.output, "CSV file (default stdout)");

  NoiseArgs na;
  auto* noise = app.add_subcommand("noise", "apply a noise model and dump canonical JSON");
  noise->add_option("input", na.input, "canonical JSON or DUE document")->required();
  noise->add_option("--format", na.format, "auto, canonical or due")->capture_default_str();
  noise->add_option("-o,--output", na.output, "output file (default stdout)");
  na.noise.add_to(noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*verb) return cmd_verbalize(va);
    if (*run) return cmd_run(ra);
    if (*eval) return cmd_evaluate(ea);
    if (*tok) return cmd_tokens(ta);
    if (*noise) return cmd_noise(na);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
