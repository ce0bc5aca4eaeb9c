// Copyright 2026 The defner Authors.
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

#include "defner/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "defner/corpus.hpp"
#include "defner/error.hpp"
#include "defner/eval.hpp"
#include "defner/rng.hpp"
#include "defner/templates.hpp"
#include "defner/text.hpp"

namespace defner {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const json& v, const fs::path& base, const std::string& key) {
  if (!v.is_string()) config_error("'" + key + "' must be a path string");
  fs::path p(v.get<std::string>());
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    config_error("'" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<int64_t>() < 0) config_error("'" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

// Null values mean "unset", as written by config_to_json.
json drop_nulls(const json& in) {
  json out = json::object();
  for (const auto& [key, value] : in.items()) {
    if (value.is_null()) continue;
    out[key] = value.is_object() ? drop_nulls(value) : value;
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const json& raw, const fs::path& base_dir) {
  if (!raw.is_object()) config_error("config must be a JSON object");
  const json j = drop_nulls(raw);
  static const std::set<std::string> kTop = {
      "name",         "dataset",        "schema",     "kb",           "allowlist",     "kb_source",
      "backend",      "extractor",      "input_format", "output_format", "k",           "selection",
      "seeds",        "augmentation",   "ablation",   "subsample_n",  "subsample_seed", "cache_dir",
      "concurrency",  "include_candidates", "link_threshold", "tui_label_map", "templates",
      "template_version"};
  check_keys(j, kTop, "config");
  ExperimentConfig c;
  try {
    if (!j.contains("dataset") || !j.contains("schema")) config_error("config needs 'dataset' and 'schema'");
    c.dataset = resolve(j["dataset"], base_dir, "dataset");
    c.schema = resolve(j["schema"], base_dir, "schema");
    c.name = j.contains("name") ? get_as<std::string>(j["name"], "name") : c.dataset.stem().string();
    if (j.contains("kb")) c.kb = resolve(j["kb"], base_dir, "kb");
    if (j.contains("allowlist")) c.allowlist = resolve(j["allowlist"], base_dir, "allowlist");
    if (j.contains("kb_source")) c.kb_source = concept_source_from_string(get_as<std::string>(j["kb_source"], "kb_source"));
    if (j.contains("backend")) {
      const json& b = j["backend"];
      check_keys(b, {"kind", "model_id", "base_url", "script", "requests_per_minute"}, "backend");
      if (!b.contains("kind")) config_error("backend needs 'kind'");
      c.backend.kind = backend_kind_from_string(get_as<std::string>(b["kind"], "backend.kind"));
      if (b.contains("model_id")) c.backend.model_id = get_as<std::string>(b["model_id"], "backend.model_id");
      if (b.contains("base_url")) c.backend.base_url = get_as<std::string>(b["base_url"], "backend.base_url");
      if (b.contains("script")) c.backend.script = resolve(b["script"], base_dir, "backend.script");
      if (b.contains("requests_per_minute")) {
        c.backend.requests_per_minute = get_as<double>(b["requests_per_minute"], "backend.requests_per_minute");
      }
    }
    if (j.contains("extractor")) {
      const auto e = get_as<std::string>(j["extractor"], "extractor");
      if (text::iequals(e, "LLM")) {
        c.extractor = ExtractorKind::kLlm;
      } else if (text::iequals(e, "LINKER")) {
        c.extractor = ExtractorKind::kLinker;
      } else {
        config_error("extractor must be LLM or LINKER");
      }
    }
    if (j.contains("input_format")) c.input_format = input_format_from_string(get_as<std::string>(j["input_format"], "input_format"));
    if (j.contains("output_format")) {
      c.output_format = output_format_from_string(get_as<std::string>(j["output_format"], "output_format"));
    }
    if (j.contains("k")) c.k = get_count(j["k"], "k");
    if (j.contains("selection")) c.selection = selection_from_string(get_as<std::string>(j["selection"], "selection"));
    if (j.contains("seeds")) {
      if (!j["seeds"].is_array()) config_error("'seeds' must be a list of integers");
      c.seeds.clear();
      for (const auto& s : j["seeds"]) {
        if (!s.is_number_integer()) config_error("'seeds' must be a list of integers");
        c.seeds.push_back(s.get<uint64_t>());
      }
    }
    if (j.contains("augmentation")) {
      c.augmentation = augmentation_from_string(get_as<std::string>(j["augmentation"], "augmentation"));
    }
    if (j.contains("ablation") && !j["ablation"].is_null()) {
      const json& a = j["ablation"];
      check_keys(a, {"mode", "donor_dataset", "donor_schema"}, "ablation");
      if (!a.contains("mode")) config_error("ablation needs 'mode'");
      AblationConfig ab;
      ab.mode = ablation_from_string(get_as<std::string>(a["mode"], "ablation.mode"));
      if (a.contains("donor_dataset")) ab.donor_dataset = resolve(a["donor_dataset"], base_dir, "ablation.donor_dataset");
      if (a.contains("donor_schema")) ab.donor_schema = resolve(a["donor_schema"], base_dir, "ablation.donor_schema");
      c.ablation = ab;
    }
    if (j.contains("subsample_n") && !j["subsample_n"].is_null()) c.subsample_n = get_count(j["subsample_n"], "subsample_n");
    if (j.contains("subsample_seed")) c.subsample_seed = get_count(j["subsample_seed"], "subsample_seed");
    if (j.contains("cache_dir")) c.cache_dir = resolve(j["cache_dir"], base_dir, "cache_dir");
    if (j.contains("concurrency")) c.concurrency = get_count(j["concurrency"], "concurrency");
    if (j.contains("include_candidates")) c.include_candidates = get_as<bool>(j["include_candidates"], "include_candidates");
    if (j.contains("link_threshold")) c.link_threshold = get_as<double>(j["link_threshold"], "link_threshold");
    if (j.contains("tui_label_map")) {
      c.tui_label_map = get_as<std::map<std::string, std::string>>(j["tui_label_map"], "tui_label_map");
    }
    if (j.contains("templates")) c.templates = resolve(j["templates"], base_dir, "templates");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, e.what());
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) config_error("config " + path.string() + " is not valid JSON");
  ExperimentConfig c = parse_config(j, path.parent_path());
  if (!j.contains("name")) c.name = path.stem().string();
  return c;
}

void validate_config(const ExperimentConfig& c) {
  if (c.seeds.empty()) config_error("'seeds' must not be empty");
  if (c.concurrency == 0) config_error("'concurrency' must be positive");
  if (!(c.link_threshold >= 0.0 && c.link_threshold <= 1.0)) config_error("'link_threshold' must be in [0, 1]");
  const bool uses_kb = c.augmentation != AugmentationMode::kNone || c.extractor == ExtractorKind::kLinker;
  if (uses_kb && !c.kb) config_error("a knowledge base ('kb') is required for this configuration");
  if (c.extractor == ExtractorKind::kLinker) return;
  if (c.output_format == OutputFormat::kLinearized) config_error("LINEARIZED is not a prompt output format");
  switch (c.augmentation) {
    case AugmentationMode::kFsDef:
      if (c.k == 0) config_error("FS_DEF requires k >= 1");
      break;
    case AugmentationMode::kIp:
    case AugmentationMode::kIpDef:
    case AugmentationMode::kZsDef:
      if (c.k != 0) config_error(std::string(to_string(c.augmentation)) + " is zero-shot only; set k = 0");
      break;
    case AugmentationMode::kNone:
      break;
  }
  if (c.ablation) {
    if (c.augmentation == AugmentationMode::kNone) config_error("an ablation needs an augmentation mode");
    if (c.ablation->mode == AblationMode::kDiffDomain && (!c.ablation->donor_dataset || !c.ablation->donor_schema)) {
      throw Error(ErrorCode::kDonorRequired, "DIFF_DOMAIN needs 'donor_dataset' and 'donor_schema'");
    }
  }
  if (c.backend.kind == BackendKind::kScripted && !c.backend.script) config_error("SCRIPTED backend needs 'script'");
}

ordered_json config_to_json(const ExperimentConfig& c) {
  auto opt_path = [](const std::optional<fs::path>& p) { return p ? ordered_json(p->generic_string()) : ordered_json(nullptr); };
  ordered_json backend{{"kind", std::string(to_string(c.backend.kind))},
                       {"model_id", c.backend.model_id},
                       {"base_url", c.backend.base_url ? ordered_json(*c.backend.base_url) : ordered_json(nullptr)},
                       {"script", opt_path(c.backend.script)},
                       {"requests_per_minute", c.backend.requests_per_minute}};
  ordered_json ablation = nullptr;
  if (c.ablation) {
    ablation = {{"mode", std::string(to_string(c.ablation->mode))},
                {"donor_dataset", opt_path(c.ablation->donor_dataset)},
                {"donor_schema", opt_path(c.ablation->donor_schema)}};
  }
  return {{"name", c.name},
          {"dataset", c.dataset.generic_string()},
          {"schema", c.schema.generic_string()},
          {"kb", opt_path(c.kb)},
          {"allowlist", opt_path(c.allowlist)},
          {"kb_source", c.kb_source ? ordered_json(std::string(to_string(*c.kb_source))) : ordered_json(nullptr)},
          {"backend", backend},
          {"extractor", c.extractor == ExtractorKind::kLlm ? "LLM" : "LINKER"},
          {"input_format", std::string(to_string(c.input_format))},
          {"output_format", std::string(to_string(c.output_format))},
          {"k", c.k},
          {"selection", std::string(to_string(c.selection))},
          {"seeds", c.seeds},
          {"augmentation", std::string(to_string(c.augmentation))},
          {"ablation", ablation},
          {"subsample_n", c.subsample_n ? ordered_json(*c.subsample_n) : ordered_json(nullptr)},
          {"subsample_seed", c.subsample_seed},
          {"cache_dir", opt_path(c.cache_dir)},
          {"concurrency", c.concurrency},
          {"include_candidates", c.include_candidates},
          {"link_threshold", c.link_threshold},
          {"tui_label_map", c.tui_label_map},
          {"templates", opt_path(c.templates)}};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kReplayMiss: return kExitReplayMiss;
    case ErrorCode::kTransportFailure:
    case ErrorCode::kAuthFailure:
    case ErrorCode::kScriptExhausted: return kExitBackend;
    default: return kExitConfig;
  }
}

std::unique_ptr<Backend> make_backend(const BackendConfig& b, const std::optional<fs::path>& cache_dir) {
  switch (b.kind) {
    case BackendKind::kScripted:
      if (!b.script) config_error("SCRIPTED backend needs a script file");
      return ScriptedBackend::from_file(*b.script);
    case BackendKind::kReplay:
      if (!cache_dir) config_error("REPLAY backend needs a cache directory");
      return std::make_unique<ReplayBackend>(*cache_dir);
    default: {
      HttpBackendConfig http = http_config_from_env(b.kind, b.base_url);
      http.requests_per_minute = b.requests_per_minute;
      return make_http_backend(std::move(http));
    }
  }
}

// ---------------------------------------------------------------------------
// Run directory helpers

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string trace_file_name(const std::string& id) {
  std::string safe;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    safe.push_back(ok ? c : '_');
  }
  if (safe != id || safe.empty() || safe.front() == '.') {
    std::ostringstream h;
    h << std::hex << fnv1a64(id);
    safe += "-" + h.str();
  }
  return safe + ".json";
}

std::optional<RunTrace> load_trace(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    return run_trace_from_json(j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Fields that make two runs comparable; operational settings are excluded.
ordered_json identity_of(ordered_json cfg) {
  cfg.erase("concurrency");
  cfg.erase("cache_dir");
  cfg.erase("name");
  return cfg;
}

struct Resources {
  DatasetSchema schema;
  Dataset dataset;
  std::vector<GoldInstance> test;
  TemplateCatalog templates;
  std::optional<KnowledgeBase> kb;
  SemanticTypeAllowlist allowlist;
  std::optional<Dataset> donor;
  MatchPolicy policy;
};

Resources load_resources(const ExperimentConfig& c) {
  DatasetSchema schema = load_schema(c.schema);
  Dataset dataset = load_dataset(c.dataset, schema);
  if (c.extractor == ExtractorKind::kLlm && c.input_format == InputFormat::kSchemaDef &&
      !schema.has_all_descriptions()) {
    throw Error(ErrorCode::kMissingDescriptions, "SCHEMA_DEF requested but schema lacks label descriptions");
  }
  std::vector<GoldInstance> test = c.subsample_n ? subsample_test(dataset, *c.subsample_n, c.subsample_seed).test
                                                 : dataset.test;
  TemplateCatalog templates = c.templates ? TemplateCatalog::load_dir(*c.templates) : TemplateCatalog::builtin();
  std::optional<KnowledgeBase> kb;
  if (c.kb) kb.emplace(c.kb_source ? source_variant(*c.kb, *c.kb_source) : load_kb(*c.kb));
  SemanticTypeAllowlist allowlist = c.allowlist ? load_allowlist(*c.allowlist) : SemanticTypeAllowlist::default_list();
  std::optional<Dataset> donor;
  if (c.ablation && c.ablation->donor_dataset) {
    if (!c.ablation->donor_schema) config_error("'donor_dataset' needs 'donor_schema'");
    donor = load_dataset(*c.ablation->donor_dataset, *c.ablation->donor_schema);
  }
  MatchPolicy policy = MatchPolicy::for_schema(schema);
  return {std::move(schema), std::move(dataset), std::move(test), std::move(templates), std::move(kb),
          std::move(allowlist), std::move(donor), policy};
}

class InstanceRunner {
 public:
  InstanceRunner(const ExperimentConfig& c, const Resources& r, Gateway* gateway)
      : c_(c), r_(r), gateway_(gateway) {}

  RunTrace run(const GoldInstance& inst, std::size_t index, uint64_t seed, const std::vector<GoldInstance>& pool) const {
    if (c_.extractor == ExtractorKind::kLinker) {
      RunTrace t;
      t.instance_id = inst.id();
      t.document = inst.document;
      t.first_pass = linker_as_extractor(inst.document.text, *r_.kb, r_.allowlist, r_.schema, c_.tui_label_map,
                                         c_.link_threshold);
      t.final_set = t.first_pass;
      return t;
    }
    const PromptContext ctx{r_.schema, c_.input_format, c_.output_format, r_.templates, c_.backend.model_id};
    const std::vector<GoldInstance> exemplars =
        select_exemplars(pool, c_.k, c_.selection, seed, index, inst.document);
    RunTrace trace = run_first_pass(inst.document, exemplars, ctx, *gateway_);
    if (c_.augmentation == AugmentationMode::kNone || trace.first_pass_gateway_failure) return trace;

    DefinitionBundle bundle = collect_definitions(inst.document, trace.first_pass, *r_.kb, r_.allowlist,
                                                  c_.include_candidates, c_.link_threshold);
    if (c_.ablation) {
      const AblationInputs inputs{r_.dataset, r_.donor ? &*r_.donor : nullptr, *r_.kb, r_.allowlist, c_.link_threshold};
      bundle = variant_bundle(inst, bundle, c_.ablation->mode, inputs, instance_seed(seed, inst.id()));
    }
    switch (c_.augmentation) {
      case AugmentationMode::kZsDef:
        run_single_turn_def(trace, bundle, ctx, *gateway_);
        break;
      case AugmentationMode::kIp:
        run_iterative(trace, bundle, ctx, *gateway_, false);
        break;
      case AugmentationMode::kIpDef:
        run_iterative(trace, bundle, ctx, *gateway_, true);
        break;
      case AugmentationMode::kFsDef: {
        std::vector<std::pair<GoldInstance, DefinitionBundle>> ex_bundles;
        for (const auto& ex : exemplars) {
          ExtractionSet gold;
          gold.entities = ex.entities;
          ex_bundles.emplace_back(ex, collect_definitions(ex.document, gold, *r_.kb, r_.allowlist,
                                                          c_.include_candidates, c_.link_threshold));
        }
        run_few_shot_def(trace, bundle, ex_bundles, ctx, *gateway_);
        break;
      }
      case AugmentationMode::kNone:
        break;
    }
    return trace;
  }

 private:
  const ExperimentConfig& c_;
  const Resources& r_;
  Gateway* gateway_;
};

std::size_t count_failed(const std::vector<Prediction>& preds) {
  return static_cast<std::size_t>(std::count_if(
      preds.begin(), preds.end(), [](const Prediction& p) { return p.set.status == ParseStatus::kFailed; }));
}

}  // namespace

// ---------------------------------------------------------------------------
// Orchestration

RunResult run_experiment(const ExperimentConfig& config, RunOptions options) {
  RunResult result;
  result.run_dir = options.run_dir;
  auto log = [&](const std::string& line) {
    if (options.log != nullptr) *options.log << line << '\n';
  };
  try {
    ExperimentConfig c = config;
    if (options.cache_dir) c.cache_dir = options.cache_dir;
    if (options.concurrency) c.concurrency = *options.concurrency;
    validate_config(c);
    if (options.run_dir.empty()) config_error("no run directory given");
    const Resources r = load_resources(c);

    std::unique_ptr<Gateway> gateway;
    if (c.extractor == ExtractorKind::kLlm) {
      const bool replay = options.cache_mode == CacheMode::kReplay ||
                          (options.cache_mode == CacheMode::kAuto && c.backend.kind == BackendKind::kReplay);
      GatewayOptions gopts;
      gopts.max_in_flight = c.concurrency;
      std::unique_ptr<Backend> backend;
      if (replay) {
        if (!c.cache_dir) config_error("replay needs a cache directory");
        backend = std::make_unique<ReplayBackend>(*c.cache_dir);
      } else {
        if (options.cache_mode == CacheMode::kRecord && !c.cache_dir) config_error("--record needs a cache directory");
        backend = options.backend ? std::move(options.backend) : make_backend(c.backend, c.cache_dir);
        if (c.cache_dir) gopts.record_dir = c.cache_dir;
      }
      gateway = std::make_unique<Gateway>(std::move(backend), gopts);
    }

    fs::create_directories(options.run_dir);
    ordered_json cfg_json = config_to_json(c);
    cfg_json["template_version"] = r.templates.version();
    const fs::path cfg_path = options.run_dir / "config.json";
    if (fs::exists(cfg_path)) {
      std::ifstream in(cfg_path, std::ios::binary);
      ordered_json previous = ordered_json::parse(in, nullptr, false);
      if (previous.is_discarded() || identity_of(previous) != identity_of(cfg_json)) {
        config_error("run directory " + options.run_dir.string() + " holds a run with a different configuration");
      }
    }
    write_atomic(cfg_path, cfg_json.dump(2) + "\n");

    const bool multi_seed = c.seeds.size() > 1;
    const std::size_t workers_wanted =
        gateway && !gateway->order_independent() ? 1 : std::max<std::size_t>(1, c.concurrency);
    result.instances = r.test.size();
    std::vector<Metrics> first_metrics;
    std::vector<Metrics> final_metrics;
    ordered_json per_seed = ordered_json::array();
    const InstanceRunner runner(c, r, gateway.get());

    for (uint64_t seed : c.seeds) {
      const fs::path seed_dir = multi_seed ? options.run_dir / ("seed_" + std::to_string(seed)) : options.run_dir;
      const fs::path trace_dir = seed_dir / "traces";
      fs::create_directories(trace_dir);
      const std::vector<GoldInstance> pool =
          c.selection == SelectionStrategy::kRetrieval ? retrieval_pool(r.dataset.train_pool, seed) : r.dataset.train_pool;

      std::vector<RunTrace> traces(r.test.size());
      std::atomic<std::size_t> next{0};
      std::atomic<std::size_t> resumed{0};
      std::mutex err_mu;
      std::exception_ptr first_error;
      auto work = [&] {
        for (std::size_t i = next++; i < r.test.size(); i = next++) {
          {
            std::lock_guard<std::mutex> lock(err_mu);
            if (first_error) return;
          }
          try {
            const GoldInstance& inst = r.test[i];
            const fs::path path = trace_dir / trace_file_name(inst.id());
            if (auto existing = load_trace(path); existing && existing->instance_id == inst.id() &&
                                                  !existing->gateway_failure() && !existing->replay_miss) {
              traces[i] = std::move(*existing);
              ++resumed;
              continue;
            }
            traces[i] = runner.run(inst, i, seed, pool);
            write_atomic(path, to_json(traces[i]).dump(2) + "\n");
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      };
      const std::size_t n_workers = std::min(workers_wanted, std::max<std::size_t>(1, r.test.size()));
      if (n_workers == 1) {
        work();
      } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
      }
      if (first_error) std::rethrow_exception(first_error);
      result.resumed += resumed;

      std::vector<Prediction> first;
      std::vector<Prediction> final_preds;
      std::vector<ErrorClassification> errors;
      std::size_t gateway_failures = 0;
      std::size_t followup_parse_failures = 0;
      std::size_t requests = 0;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        const RunTrace& t = traces[i];
        if (t.gateway_failure()) ++gateway_failures;
        if (t.replay_miss) ++result.replay_misses;
        followup_parse_failures += t.followup_parse_failures;
        requests += t.requests;
        first.push_back({t.instance_id, t.first_pass});
        final_preds.push_back({t.instance_id, t.final_set});
        auto cls = classify_errors(t.final_set.entities, r.test[i].entities, r.policy);
        errors.insert(errors.end(), cls.begin(), cls.end());
      }
      result.gateway_failures += gateway_failures;
      log("seed " + std::to_string(seed) + ": " + std::to_string(traces.size()) + " instances, " +
          std::to_string(resumed.load()) + " resumed, " + std::to_string(gateway_failures) + " gateway failures");

      std::ostringstream pred_out;
      write_predictions(pred_out, final_preds);
      write_atomic(seed_dir / "predictions.jsonl", pred_out.str());

      if (result.replay_misses > 0) {
        result.exit_code = kExitReplayMiss;
        result.message = std::to_string(result.replay_misses) + " request(s) missing from the replay cache";
        return result;
      }
      if (gateway_failures * 10 > traces.size()) {
        result.exit_code = kExitBackend;
        result.message = std::to_string(gateway_failures) + " of " + std::to_string(traces.size()) +
                         " instances failed at the gateway";
        return result;
      }

      const Metrics fm = strict_prf(first, r.test, r.policy);
      const Metrics lm = strict_prf(final_preds, r.test, r.policy);
      first_metrics.push_back(fm);
      final_metrics.push_back(lm);
      ordered_json seed_json{{"seed", seed},
                             {"n_instances", traces.size()},
                             {"requests", requests},
                             {"first_pass", to_json(fm)},
                             {"final", to_json(lm)},
                             {"error_distribution", to_json(error_distribution(errors))},
                             {"parse_failures",
                              {{"first_pass", count_failed(first)}, {"followup", followup_parse_failures}}},
                             {"gateway_failures", gateway_failures}};
      if (multi_seed) write_atomic(seed_dir / "metrics.json", seed_json.dump(2) + "\n");
      per_seed.push_back(std::move(seed_json));
    }

    const SeedAggregate first_agg = aggregate_seeds(first_metrics);
    const SeedAggregate final_agg = aggregate_seeds(final_metrics);
    ordered_json metrics{{"name", c.name},
                         {"template_version", r.templates.version()},
                         {"extractor", c.extractor == ExtractorKind::kLlm ? "LLM" : "LINKER"},
                         {"augmentation", std::string(to_string(c.augmentation))},
                         {"ablation", c.ablation ? ordered_json(std::string(to_string(c.ablation->mode)))
                                                 : ordered_json(nullptr)},
                         {"n_instances", r.test.size()},
                         {"seeds", c.seeds},
                         {"aggregate", {{"first_pass", to_json(first_agg)}, {"final", to_json(final_agg)}}},
                         {"per_seed", per_seed}};
    write_atomic(options.run_dir / "metrics.json", metrics.dump(2) + "\n");

    std::string variant = c.extractor == ExtractorKind::kLinker ? std::string("LINKER")
                                                                 : std::string(to_string(c.augmentation));
    if (c.ablation) variant += "+" + std::string(to_string(c.ablation->mode));
    write_report({{"first_pass", first_agg}, {variant, final_agg}}, true, options.run_dir);

    const UsageReport usage = gateway ? gateway->usage_report() : UsageReport{};
    write_atomic(options.run_dir / "usage.json", usage.to_json() + "\n");
    result.metrics = std::move(metrics);
    log("wrote " + (options.run_dir / "metrics.json").string());
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.code());
    result.message = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  }
  return result;
}

std::vector<ReportRow> load_report_rows(const std::vector<fs::path>& run_dirs) {
  std::vector<ReportRow> rows;
  for (const auto& dir : run_dirs) {
    const fs::path path = dir / "metrics.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) config_error("missing " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) config_error(path.string() + " is not valid JSON");
    try {
      rows.push_back({j.value("name", dir.filename().string()), seed_aggregate_from_json(j.at("aggregate").at("final"))});
    } catch (const json::exception& e) {
      config_error(path.string() + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace defner
