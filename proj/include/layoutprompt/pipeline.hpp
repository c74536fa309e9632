#pragma once
//
// End-to-end orchestration: documents -> noise -> verbalization -> prompt ->
// model -> extraction, and extraction + ground truth -> report.
//
// Run directory layout:
//   prompts/<dataset>/<doc>__t<task>__<verbalizer>__<noise>.txt
//   responses.jsonl    run log; also a replay store; rewritten in job order
//   extractions.jsonl  one record per (document, task, verbalizer, noise)
//   errors.jsonl       per-job failures
//   timings.jsonl      wall-clock timings (the only non-reproducible file)
//   manifest.json      version, config hash, seed, job counts
//
// Runs resume: a request whose fingerprint already sits in responses.jsonl
// is answered from there and never re-sent.
//

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "layoutprompt/extract.hpp"
#include "layoutprompt/ingest.hpp"
#include "layoutprompt/llm.hpp"
#include "layoutprompt/metrics.hpp"
#include "layoutprompt/noise.hpp"
#include "layoutprompt/prompt.hpp"
#include "layoutprompt/verbalize.hpp"

namespace layoutprompt {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

namespace fs = std::filesystem;

struct DatasetSpec {
  std::string name;
  std::vector<fs::path> documents;
  InputFormat format = InputFormat::Auto;
  /// {"<doc_id>": task | [task, ...]}
  fs::path tasks;
};

struct BackendSpec {
  std::string kind = "replay";  // "replay" | "live"
  fs::path store;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_s = 60;
};

struct PipelineConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<VerbalizerId> verbalizers{VerbalizerId::PlainText};
  std::vector<NoiseModelId> noise_models{NoiseModelId::None};
  int translate_max = 20;
  std::optional<double> min_char_width;
  std::optional<double> min_char_height;
  PromptPattern pattern = PromptPattern::A;
  std::optional<fs::path> templates_dir;
  nlohmann::json format_descriptions = nlohmann::json::object();
  BackendSpec backend;
  std::string model_id = "gpt-3.5-turbo-1106";
  bool json_mode = true;
  PromptWrapper wrapper = PromptWrapper::None;
  int max_attempts = 3;
  double requests_per_minute = 0;
  fs::path output_dir = "run";
  std::uint64_t seed = 0;
  int workers = 1;
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::string path_string(const fs::path& p) { return p.generic_string(); }

}  // namespace detail

/// Parses a pipeline config. Relative paths resolve against `base_dir`.
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& dj : j.at("datasets")) {
      DatasetSpec d;
      d.name = dj.at("name").get<std::string>();
      if (dj.contains("documents")) {
        for (const auto& p : dj["documents"]) {
          d.documents.push_back(detail::resolve(base_dir, p.get<std::string>()));
        }
      }
      if (dj.contains("documents_dir")) {
        const auto dir = detail::resolve(base_dir, dj["documents_dir"].get<std::string>());
        if (!fs::is_directory(dir)) throw ConfigError("documents_dir does not exist: " + dir.string());
        std::vector<fs::path> found;
        for (const auto& e : fs::directory_iterator(dir)) {
          if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
        }
        std::sort(found.begin(), found.end());
        d.documents.insert(d.documents.end(), found.begin(), found.end());
      }
      const auto fmt = dj.value("format", std::string("auto"));
      if (fmt == "auto") d.format = InputFormat::Auto;
      else if (fmt == "canonical") d.format = InputFormat::Canonical;
      else if (fmt == "due") d.format = InputFormat::Due;
      else throw ConfigError("unknown dataset format '" + fmt + "'");
      d.tasks = detail::resolve(base_dir, dj.at("tasks").get<std::string>());
      c.datasets.push_back(std::move(d));
    }
    if (j.contains("verbalizers")) {
      c.verbalizers.clear();
      for (const auto& v : j["verbalizers"]) {
        const auto id = parse_verbalizer(v.get<std::string>());
        if (!id) throw ConfigError("unknown verbalizer '" + v.get<std::string>() + "'");
        c.verbalizers.push_back(*id);
      }
    }
    if (j.contains("noise")) {
      c.noise_models.clear();
      for (const auto& v : j["noise"]) {
        const auto id = parse_noise_model(v.get<std::string>());
        if (!id) throw ConfigError("unknown noise model '" + v.get<std::string>() + "'");
        c.noise_models.push_back(*id);
      }
    }
    c.translate_max = j.value("translate_max", c.translate_max);
    if (j.contains("min_char_width") && !j["min_char_width"].is_null()) {
      c.min_char_width = j["min_char_width"].get<double>();
    }
    if (j.contains("min_char_height") && !j["min_char_height"].is_null()) {
      c.min_char_height = j["min_char_height"].get<double>();
    }
    if (j.contains("pattern")) {
      const auto p = parse_pattern(j["pattern"].get<std::string>());
      if (!p) throw ConfigError("pattern must be A or B");
      c.pattern = *p;
    }
    if (j.contains("templates_dir")) {
      c.templates_dir = detail::resolve(base_dir, j["templates_dir"].get<std::string>());
    }
    if (j.contains("format_descriptions")) c.format_descriptions = j["format_descriptions"];
    if (j.contains("backend")) {
      const auto& b = j["backend"];
      c.backend.kind = b.value("kind", c.backend.kind);
      if (b.contains("store")) c.backend.store = detail::resolve(base_dir, b["store"].get<std::string>());
      c.backend.endpoint = b.value("endpoint", c.backend.endpoint);
      c.backend.api_key_env = b.value("api_key_env", c.backend.api_key_env);
      c.backend.timeout_s = b.value("timeout_s", c.backend.timeout_s);
    }
    c.model_id = j.value("model_id", c.model_id);
    c.json_mode = j.value("json_mode", c.json_mode);
    if (j.contains("wrapper")) {
      const auto w = parse_wrapper(j["wrapper"].get<std::string>());
      if (!w) throw ConfigError("wrapper must be none or solar");
      c.wrapper = *w;
    }
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    if (j.contains("output_dir")) c.output_dir = detail::resolve(base_dir, j["output_dir"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
  const auto data = detail::read_file(path);
  auto j = nlohmann::json::parse(data, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
  return parse_pipeline_config(j, path.parent_path());
}

/// Effective configuration as JSON (the input to the config hash).
inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  auto datasets = nlohmann::ordered_json::array();
  for (const auto& d : c.datasets) {
    nlohmann::ordered_json dj;
    dj["name"] = d.name;
    auto docs = nlohmann::ordered_json::array();
    for (const auto& p : d.documents) docs.push_back(p.filename().string());
    dj["documents"] = docs;
    dj["tasks"] = d.tasks.filename().string();
    datasets.push_back(dj);
  }
  j["datasets"] = datasets;
  auto verbs = nlohmann::ordered_json::array();
  for (auto v : c.verbalizers) verbs.push_back(std::string(to_string(v)));
  j["verbalizers"] = verbs;
  auto noise = nlohmann::ordered_json::array();
  for (auto n : c.noise_models) noise.push_back(std::string(to_string(n)));
  j["noise"] = noise;
  j["translate_max"] = c.translate_max;
  j["min_char_width"] = c.min_char_width ? nlohmann::ordered_json(*c.min_char_width) : nlohmann::ordered_json(nullptr);
  j["min_char_height"] = c.min_char_height ? nlohmann::ordered_json(*c.min_char_height) : nlohmann::ordered_json(nullptr);
  j["pattern"] = std::string(to_string(c.pattern));
  j["format_descriptions"] = c.format_descriptions;
  j["model_id"] = c.model_id;
  j["json_mode"] = c.json_mode;
  j["wrapper"] = std::string(to_string(c.wrapper));
  j["seed"] = c.seed;
  return j;
}

/// First 16 hex digits of SHA-256 over the effective config. Paths enter by
/// file name only, so moving a run tree keeps its hash.
inline std::string config_hash(const PipelineConfig& c) {
  return sha256_hex(to_json(c).dump()).substr(0, 16);
}

struct Provenance {
  std::string version{kToolkitVersion};
  std::string config_hash;
  std::optional<std::uint64_t> seed;
};

inline nlohmann::ordered_json to_json(const Provenance& p) {
  nlohmann::ordered_json j;
  j["version"] = p.version;
  j["config_hash"] = p.config_hash;
  j["seed"] = p.seed ? nlohmann::ordered_json(*p.seed) : nlohmann::ordered_json(nullptr);
  return j;
}

/// Throws ConfigError for missing inputs or a live backend without
/// credentials configured.
inline void validate(const PipelineConfig& c) {
  if (c.datasets.empty()) throw ConfigError("config has no datasets");
  if (c.verbalizers.empty()) throw ConfigError("config has no verbalizers");
  if (c.noise_models.empty()) throw ConfigError("config has no noise models");
  if (c.translate_max < 0) throw ConfigError("translate_max must be >= 0");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  for (const auto& d : c.datasets) {
    if (d.documents.empty()) throw ConfigError("dataset '" + d.name + "' has no documents");
    for (const auto& p : d.documents) {
      if (!fs::exists(p)) throw ConfigError("missing document " + p.string());
    }
    if (!fs::exists(d.tasks)) throw ConfigError("missing task file " + d.tasks.string());
  }
  if (c.backend.kind == "replay") {
    if (c.backend.store.empty() || !fs::exists(c.backend.store)) {
      throw ConfigError("replay backend needs an existing 'store'");
    }
  } else if (c.backend.kind == "live") {
    if (!c.backend.api_key_env.empty()) {
      const char* key = std::getenv(c.backend.api_key_env.c_str());
      if (!key || !*key) throw ConfigError("environment variable " + c.backend.api_key_env + " is not set");
    }
  } else {
    throw ConfigError("backend kind must be 'replay' or 'live'");
  }
  if (c.templates_dir && !fs::is_directory(*c.templates_dir)) {
    throw ConfigError("templates_dir does not exist");
  }
}

/// {"<doc_id>": task | [task, ...]}
inline std::map<std::string, std::vector<TaskRequest>> load_tasks(const fs::path& path) {
  auto j = nlohmann::json::parse(detail::read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("task file must be a JSON object", path.string());
  std::map<std::string, std::vector<TaskRequest>> out;
  for (const auto& [doc, v] : j.items()) {
    const std::string where = path.filename().string() + ":" + doc;
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        out[doc].push_back(parse_task(v[i], where + "[" + std::to_string(i) + "]"));
      }
    } else {
      out[doc].push_back(parse_task(v, where));
    }
  }
  return out;
}

struct RunSummary {
  std::size_t jobs = 0;
  std::size_t requests_sent = 0;
  std::size_t responses_reused = 0;
  std::size_t failures = 0;
  std::string config_hash;
};

namespace detail {

struct Job {
  std::size_t dataset = 0;
  std::size_t document = 0;
  std::size_t task = 0;
  VerbalizerId verbalizer = VerbalizerId::PlainText;
  NoiseModelId noise = NoiseModelId::None;
};

struct JobResult {
  bool ok = false;
  std::string error;
  std::string fingerprint;
  std::optional<RunLogEntry> log;
  std::optional<ExtractionResult> extraction;
  bool reused = false;
};

struct LoadedDoc {
  std::optional<OcrDocument> doc;
  std::string error;
  std::vector<TaskRequest> tasks;
};

inline std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

inline void write_text(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace detail

/// Runs every (document x task x verbalizer x noise) job of the config.
/// `backend` answers requests not found in an earlier run log.
inline RunSummary run_pipeline(const PipelineConfig& cfg, Backend& backend) {
  validate(cfg);
  const auto hash = config_hash(cfg);
  const Provenance prov{std::string(kToolkitVersion), hash, cfg.seed};

  fs::create_directories(cfg.output_dir / "prompts");
  const auto responses_path = cfg.output_dir / "responses.jsonl";
  ReplayStore previous;
  if (fs::exists(responses_path)) previous = ReplayStore::load(responses_path);

  const PromptTemplates templates =
      cfg.templates_dir ? PromptTemplates::from_directory(*cfg.templates_dir) : PromptTemplates{};
  VerbalizeOptions vopts;
  vopts.descriptions.merge(cfg.format_descriptions);

  // Documents and tasks, loaded once.
  std::vector<std::vector<detail::LoadedDoc>> loaded(cfg.datasets.size());
  std::vector<detail::Job> jobs;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    const auto& ds = cfg.datasets[d];
    fs::create_directories(cfg.output_dir / "prompts" / detail::safe_name(ds.name));
    const auto tasks = load_tasks(ds.tasks);
    for (std::size_t i = 0; i < ds.documents.size(); ++i) {
      detail::LoadedDoc ld;
      try {
        ld.doc = load_document(ds.documents[i], ds.format);
        if (const auto it = tasks.find(ld.doc->doc_id); it != tasks.end()) {
          ld.tasks = it->second;
        } else {
          ld.error = "no task defined for document '" + ld.doc->doc_id + "'";
        }
      } catch (const Error& e) {
        ld.error = e.what();
      }
      const std::size_t n_tasks = std::max<std::size_t>(1, ld.tasks.size());
      loaded[d].push_back(std::move(ld));
      for (std::size_t t = 0; t < n_tasks; ++t) {
        for (auto v : cfg.verbalizers) {
          for (auto n : cfg.noise_models) jobs.push_back({d, i, t, v, n});
        }
      }
    }
  }

  std::vector<detail::JobResult> results(jobs.size());
  {
    JsonlWriter live_log(responses_path);
    JsonlWriter timing_log(cfg.output_dir / "timings.jsonl");
    RateLimiter limiter(cfg.requests_per_minute);

    auto run_job = [&](std::size_t index) {
      const auto& job = jobs[index];
      auto& res = results[index];
      const auto& ld = loaded[job.dataset][job.document];
      try {
        if (!ld.doc) throw Error(ld.error);
        if (ld.tasks.empty()) throw Error(ld.error);
        const auto& doc = *ld.doc;
        const auto& task = ld.tasks[job.task];

        NoiseConfig ncfg{job.noise, cfg.seed, cfg.translate_max, cfg.min_char_width, cfg.min_char_height};
        const auto noisy = apply_noise(doc, ncfg);
        const auto verbalization = verbalize(noisy, job.verbalizer, vopts);
        const auto prompt = render_prompt(verbalization, task, cfg.pattern, templates);

        const auto stem = detail::safe_name(doc.doc_id) + "__t" + std::to_string(job.task) + "__" +
                          std::string(to_string(job.verbalizer)) + "__" +
                          std::string(to_string(job.noise));
        detail::write_text(cfg.output_dir / "prompts" /
                               detail::safe_name(cfg.datasets[job.dataset].name) / (stem + ".txt"),
                           prompt);

        LlmRequest req{prompt, cfg.model_id, cfg.json_mode, cfg.wrapper};
        res.fingerprint = fingerprint(req);
        std::string response;
        if (auto hit = previous.lookup(res.fingerprint)) {
          response = *hit;
          res.reused = true;
        } else {
          CompletionContext ctx;
          ctx.backend = &backend;
          ctx.retry.max_attempts = cfg.max_attempts;
          ctx.limiter = &limiter;
          ctx.run_log = &live_log;
          ctx.timing_log = &timing_log;
          response = complete(req, ctx);
        }
        res.log = RunLogEntry{res.fingerprint, req.model_id, req.wrapper, req.prompt, response};
        res.extraction = extract_answers(response, expected_answer_schema(task));
        res.ok = true;
      } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
      }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers),
                                                 std::max<std::size_t>(1, jobs.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  // Deterministic rewrite of every reproducible artifact, in job order.
  RunSummary summary;
  summary.jobs = jobs.size();
  summary.config_hash = hash;
  {
    const auto tmp = cfg.output_dir / "responses.jsonl.tmp";
    {
      JsonlWriter out(tmp, true);
      std::set<std::string> written;
      for (const auto& r : results) {
        if (!r.log || !written.insert(r.fingerprint).second) continue;
        auto j = to_json(*r.log);
        j["provenance"] = to_json(prov);
        out.write(j);
      }
    }
    fs::rename(tmp, responses_path);
  }
  JsonlWriter extractions(cfg.output_dir / "extractions.jsonl", true);
  JsonlWriter errors(cfg.output_dir / "errors.jsonl", true);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& r = results[i];
    const auto& ld = loaded[job.dataset][job.document];
    nlohmann::ordered_json j;
    j["dataset"] = cfg.datasets[job.dataset].name;
    j["doc_id"] = ld.doc ? ld.doc->doc_id : detail::path_string(cfg.datasets[job.dataset].documents[job.document].filename());
    j["task"] = job.task;
    j["verbalizer"] = std::string(to_string(job.verbalizer));
    j["noise"] = std::string(to_string(job.noise));
    if (r.ok) {
      j["kind"] = std::string(to_string(ld.tasks[job.task].kind));
      j["pattern"] = std::string(to_string(cfg.pattern));
      j["fingerprint"] = r.fingerprint;
      const auto body = to_json(*r.extraction);
      j["answers"] = body["answers"];
      j["diagnostics"] = body["diagnostics"];
      j["provenance"] = to_json(prov);
      extractions.write(j);
      if (r.reused) ++summary.responses_reused; else ++summary.requests_sent;
    } else {
      j["error"] = r.error;
      j["provenance"] = to_json(prov);
      errors.write(j);
      ++summary.failures;
    }
  }

  nlohmann::ordered_json manifest;
  manifest["provenance"] = to_json(prov);
  manifest["config"] = to_json(cfg);
  manifest["jobs"] = summary.jobs;
  manifest["failures"] = summary.failures;
  detail::write_text(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// Evaluation

/// {"<doc_id>": {"<item_key>": {"value": "..." | ["...", ...] | null,
///                              "type": "string|date|currency|quantity"}}}
struct GroundTruthItem {
  std::vector<std::string> values;
  AnswerType type = AnswerType::String;
};
using GroundTruth = std::map<std::string, std::map<std::string, GroundTruthItem>>;

inline GroundTruth parse_ground_truth(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("ground truth must be an object", "$");
  GroundTruth gt;
  for (const auto& [doc, items] : j.items()) {
    if (!items.is_object()) throw ParseError("items must be an object", "$." + doc);
    for (const auto& [key, item] : items.items()) {
      const std::string where = "$." + doc + "." + key;
      GroundTruthItem g;
      const nlohmann::json* value = &item;
      if (item.is_object()) {
        if (item.contains("type")) {
          const auto t = parse_answer_type(item["type"].get<std::string>());
          if (!t) throw ParseError("unknown answer type", where);
          g.type = *t;
        }
        if (!item.contains("value")) throw ParseError("missing 'value'", where);
        value = &item["value"];
      }
      if (value->is_array()) {
        for (const auto& v : *value) {
          if (auto s = stringify_scalar(v)) g.values.push_back(*s);
        }
      } else if (!value->is_null()) {
        auto s = stringify_scalar(*value);
        if (!s) throw ParseError("value must be a scalar or list", where);
        g.values.push_back(*s);
      }
      g.values.erase(std::remove_if(g.values.begin(), g.values.end(),
                                    [](const std::string& s) { return text::trim(s).empty(); }),
                     g.values.end());
      gt[doc][key] = std::move(g);
    }
  }
  return gt;
}

/// Extraction and ground-truth ids disagree.
class IdMismatch : public Error {
 public:
  IdMismatch(std::vector<std::string> only_extractions, std::vector<std::string> only_truth)
      : Error(describe(only_extractions, only_truth)),
        only_extractions_(std::move(only_extractions)),
        only_truth_(std::move(only_truth)) {}

  const std::vector<std::string>& only_in_extractions() const { return only_extractions_; }
  const std::vector<std::string>& only_in_ground_truth() const { return only_truth_; }

 private:
  static std::string describe(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::string s = "id mismatch between extractions and ground truth";
    for (const auto& x : a) s += "\n  + " + x + " (extractions only)";
    for (const auto& x : b) s += "\n  - " + x + " (ground truth only)";
    return s;
  }
  std::vector<std::string> only_extractions_;
  std::vector<std::string> only_truth_;
};

struct EvalOptions {
  Metric metric = Metric::Typed;
  std::map<std::string, Metric> dataset_metric;
  bool allow_rejection = true;
};

inline Metric metric_for(const EvalOptions& o, const std::string& dataset) {
  const auto it = o.dataset_metric.find(dataset);
  return it == o.dataset_metric.end() ? o.metric : it->second;
}

inline std::vector<nlohmann::json> load_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON line", path.string() + ":" + std::to_string(lineno));
    out.push_back(std::move(j));
  }
  return out;
}

/// Scores every answer of every extraction record. Throws EmptyEvaluation
/// for no records and IdMismatch when documents or item keys differ.
inline std::vector<ScoredRecord> score_extractions(const std::vector<nlohmann::json>& extractions,
                                                   const GroundTruth& gt, const EvalOptions& opts) {
  if (extractions.empty()) throw EmptyEvaluation();
  std::set<std::string> seen_docs;
  std::set<std::string> only_ex;
  std::vector<ScoredRecord> out;
  for (const auto& rec : extractions) {
    const auto doc = rec.value("doc_id", "");
    const auto dataset = rec.value("dataset", "default");
    seen_docs.insert(doc);
    const auto git = gt.find(doc);
    if (git == gt.end()) {
      only_ex.insert(doc);
      continue;
    }
    const auto extraction = extraction_from_json(rec);
    for (const auto& [key, answer] : extraction.answers) {
      const auto iit = git->second.find(key);
      if (iit == git->second.end()) {
        only_ex.insert(doc + "/" + key);
        continue;
      }
      ScoredRecord s;
      s.dataset = dataset;
      s.doc_id = doc;
      s.verbalizer = rec.value("verbalizer", "");
      s.noise = rec.value("noise", "");
      s.record = score_item(key, answer, iit->second.values, iit->second.type,
                            metric_for(opts, dataset), opts.allow_rejection);
      out.push_back(std::move(s));
    }
  }
  std::vector<std::string> only_gt;
  for (const auto& [doc, items] : gt) {
    if (!seen_docs.count(doc)) only_gt.push_back(doc);
  }
  if (!only_ex.empty() || !only_gt.empty()) {
    throw IdMismatch({only_ex.begin(), only_ex.end()}, only_gt);
  }
  if (out.empty()) throw EmptyEvaluation();
  return out;
}

inline nlohmann::ordered_json report_json(const Report& rep, const EvalOptions& opts,
                                          const Provenance& prov) {
  nlohmann::ordered_json j;
  j["provenance"] = to_json(prov);
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [name, s] : rep.per_dataset) metrics[name] = std::string(to_string(metric_for(opts, name)));
  j["metric"] = metrics;
  j["records"] = rep.total;
  j["mean_over_datasets"] = rep.mean_over_datasets;
  auto group = [](const std::map<std::string, GroupScore>& m) {
    nlohmann::ordered_json g = nlohmann::ordered_json::object();
    for (const auto& [k, s] : m) g[k] = {{"score", s.score}, {"count", s.count}};
    return g;
  };
  j["datasets"] = group(rep.per_dataset);
  j["verbalizers"] = group(rep.per_verbalizer);
  j["noise_models"] = group(rep.per_noise);
  auto cells = nlohmann::ordered_json::array();
  for (const auto& [key, c] : rep.cells) {
    const auto& [ds, verb, noise] = key;
    nlohmann::ordered_json cj;
    cj["dataset"] = ds;
    cj["verbalizer"] = verb;
    cj["noise"] = noise;
    cj["score"] = c.score.score;
    cj["count"] = c.score.count;
    cj["best"] = c.best;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

inline std::string report_csv(const Report& rep, const EvalOptions& opts, const Provenance& prov) {
  std::string out = "# version=" + prov.version + " config_hash=" + prov.config_hash +
                    " seed=" + (prov.seed ? std::to_string(*prov.seed) : std::string("none")) + "\n";
  out += "dataset,verbalizer,noise,metric,score,count,best\n";
  char buf[64];
  for (const auto& [key, c] : rep.cells) {
    const auto& [ds, verb, noise] = key;
    std::snprintf(buf, sizeof buf, "%.6f", c.score.score);
    out += ds + "," + verb + "," + noise + "," + std::string(to_string(metric_for(opts, ds))) + "," +
           buf + "," + std::to_string(c.score.count) + "," + (c.best ? "*" : "") + "\n";
  }
  return out;
}

/// Seed shared by all extraction records, if any.
inline std::optional<std::uint64_t> common_seed(const std::vector<nlohmann::json>& extractions) {
  std::optional<std::uint64_t> seed;
  for (const auto& r : extractions) {
    if (!r.contains("provenance") || !r["provenance"].contains("seed") ||
        !r["provenance"]["seed"].is_number_unsigned()) {
      return std::nullopt;
    }
    const auto s = r["provenance"]["seed"].get<std::uint64_t>();
    if (seed && *seed != s) return std::nullopt;
    seed = s;
  }
  return seed;
}

inline std::string eval_config_hash(const EvalOptions& o) {
  nlohmann::ordered_json j;
  j["metric"] = std::string(to_string(o.metric));
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [k, m] : o.dataset_metric) per[k] = std::string(to_string(m));
  j["dataset_metric"] = per;
  j["allow_rejection"] = o.allow_rejection;
  return sha256_hex(j.dump()).substr(0, 16);
}

/// Scores, aggregates and writes report.json + report.csv into `out_dir`.
inline Report evaluate_files(const fs::path& extractions_path, const fs::path& gt_path,
                             const EvalOptions& opts, const fs::path& out_dir) {
  const auto extractions = load_jsonl(extractions_path);
  auto gt_json = nlohmann::json::parse(detail::read_file(gt_path), nullptr, false);
  if (gt_json.is_discarded()) throw ParseError("invalid JSON", gt_path.string());
  const auto gt = parse_ground_truth(gt_json);
  const auto scored = score_extractions(extractions, gt, opts);
  const auto rep = aggregate(scored);
  const Provenance prov{std::string(kToolkitVersion), eval_config_hash(opts), common_seed(extractions)};
  fs::create_directories(out_dir);
  detail::write_text(out_dir / "report.json", report_json(rep, opts, prov).dump(2) + "\n");
  detail::write_text(out_dir / "report.csv", report_csv(rep, opts, prov));
  return rep;
}

}  // namespace layoutprompt
