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

// defner: run|eval|link|gen-defs|report

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "defner/corpus.hpp"
#include "defner/eval.hpp"
#include "defner/experiment.hpp"
#include "defner/kb.hpp"
#include "defner/llm_gateway.hpp"
#include "defner/templates.hpp"
#include "defner/text.hpp"

namespace fs = std::filesystem;
using namespace defner;

namespace {

struct GlobalFlags {
  std::string cache_dir;
  bool record = false;
  bool replay = false;
  std::size_t concurrency = 0;
  bool verbose = false;
};

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

int fail(int code, const std::string& message) {
  std::cerr << "defner: " << message << '\n';
  return code;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
}

// --- run -------------------------------------------------------------------

int cmd_run(const std::string& config_path, const std::string& out_dir, const GlobalFlags& g) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const Error& e) {
    return fail(exit_code_for(e.code()), e.what());
  }
  RunOptions options;
  options.run_dir = out_dir.empty() ? fs::path("runs") / config.name : fs::path(out_dir);
  options.cache_mode = g.replay ? CacheMode::kReplay : g.record ? CacheMode::kRecord : CacheMode::kAuto;
  options.cache_dir = opt_path(g.cache_dir);
  if (g.concurrency > 0) options.concurrency = g.concurrency;
  if (g.verbose) options.log = &std::cerr;
  const RunResult result = run_experiment(config, std::move(options));
  if (result.exit_code != kExitOk) return fail(result.exit_code, result.message);
  const auto& agg = result.metrics["aggregate"];
  std::cout << "run directory: " << result.run_dir.string() << '\n'
            << "instances: " << result.instances << "  seeds: " << config.seeds.size() << '\n'
            << "first-pass F1: " << format_percent(agg["first_pass"]["f1"]["mean"].get<double>() * 100.0) << '\n'
            << "final F1: " << format_percent(agg["final"]["f1"]["mean"].get<double>() * 100.0) << '\n';
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string predictions;
  std::string dataset;
  std::string schema;
  std::string out;
  bool type_insensitive = false;
  bool case_sensitive = false;
  bool keep_whitespace = false;
  bool keep_punct = false;
  std::size_t audit = 0;
  uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  try {
    const DatasetSchema schema = load_schema(a.schema);
    const Dataset dataset = load_dataset(a.dataset, schema);
    const std::vector<Prediction> preds = read_predictions(a.predictions);
    MatchPolicy policy = MatchPolicy::for_schema(schema);
    if (a.type_insensitive) policy.type_sensitive = false;
    policy.lowercase = !a.case_sensitive;
    policy.collapse_whitespace = !a.keep_whitespace;
    policy.strip_edge_punct = !a.keep_punct;

    const Metrics m = strict_prf(preds, dataset.test, policy);
    std::map<std::string, const ExtractionSet*> by_id;
    for (const auto& p : preds) by_id.emplace(p.id, &p.set);
    std::vector<ErrorClassification> errors;
    nlohmann::ordered_json taxonomy = nlohmann::ordered_json::array();
    for (const auto& g : dataset.test) {
      for (auto& cls : classify_errors(by_id.at(g.id())->entities, g.entities, policy)) {
        taxonomy.push_back({{"id", g.id()},
                            {"surface", cls.entity.surface},
                            {"type", cls.entity.entity_type},
                            {"category", std::string(to_string(cls.category))},
                            {"counterpart", cls.counterpart ? nlohmann::ordered_json(cls.counterpart->surface)
                                                            : nlohmann::ordered_json(nullptr)}});
        errors.push_back(std::move(cls));
      }
    }
    nlohmann::ordered_json out{{"metrics", to_json(m)}, {"error_distribution", to_json(error_distribution(errors))}};
    std::cout << out.dump(2) << '\n';
    if (!a.out.empty()) {
      const fs::path dir(a.out);
      write_file(dir / "metrics.json", out.dump(2) + "\n");
      write_file(dir / "taxonomy.json", taxonomy.dump(2) + "\n");
      std::ostringstream audit;
      write_audit_csv(audit, preds, dataset.test, policy, a.audit, a.seed);
      write_file(dir / "audit.csv", audit.str());
    }
    return kExitOk;
  } catch (const Error& e) {
    return fail(exit_code_for(e.code()), e.what());
  }
}

// --- link ------------------------------------------------------------------

int cmd_link(const std::string& text_arg, const std::string& file, const std::string& kb_path,
             const std::string& allowlist_path, double threshold) {
  try {
    const KnowledgeBase kb = load_kb(kb_path);
    const SemanticTypeAllowlist allowlist =
        allowlist_path.empty() ? SemanticTypeAllowlist::default_list() : load_allowlist(allowlist_path);
    const std::string input = file.empty() ? text_arg : read_file(file);
    std::cout << "begin\tend\tspan\tcui\ttui\tscore\n";
    for (const auto& m : link_mentions(input, kb, allowlist, threshold)) {
      std::cout << m.begin << '\t' << m.end << '\t' << text::sanitize_cell(m.span_text) << '\t' << m.cui << '\t'
                << m.tui << '\t' << std::fixed << std::setprecision(4) << m.score << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    return fail(kExitConfig, e.what());
  }
}

// --- gen-defs ----------------------------------------------------------------

struct GenDefsArgs {
  std::string terms;
  std::string out;
  std::string backend = "SCRIPTED";
  std::string model = "default";
  std::string base_url;
  std::string script;
  std::string templates;
};

int cmd_gen_defs(const GenDefsArgs& a, const GlobalFlags& g) {
  try {
    std::vector<std::string> terms;
    {
      std::istringstream in(read_file(a.terms));
      std::string line;
      while (std::getline(in, line)) {
        const std::string_view t = text::trim(line);
        if (!t.empty()) terms.emplace_back(t);
      }
    }
    BackendConfig bc;
    bc.kind = g.replay ? BackendKind::kReplay : backend_kind_from_string(a.backend);
    bc.model_id = a.model;
    if (!a.base_url.empty()) bc.base_url = a.base_url;
    if (!a.script.empty()) bc.script = a.script;
    const std::optional<fs::path> cache_dir = opt_path(g.cache_dir);
    if (g.record && !cache_dir) return fail(kExitConfig, "--record needs --cache-dir");

    GeneratedDefinitions result;
    if (!terms.empty()) {
      GatewayOptions gopts;
      if (cache_dir && bc.kind != BackendKind::kReplay) gopts.record_dir = cache_dir;
      if (g.concurrency > 0) gopts.max_in_flight = g.concurrency;
      Gateway gateway(make_backend(bc, cache_dir), gopts);
      const TemplateCatalog templates =
          a.templates.empty() ? TemplateCatalog::builtin() : TemplateCatalog::load_dir(a.templates);
      result = generate_definitions(terms, gateway, templates, a.model, gopts.max_in_flight);
    }

    const fs::path out(a.out);
    const bool fresh = !fs::exists(out) || fs::file_size(out) == 0;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream os(out, std::ios::binary | std::ios::app);
    if (!os) return fail(kExitConfig, "cannot write " + out.string());
    if (fresh) write_kb_header(os);
    for (const auto& c : result.concepts) write_kb_row(os, c);
    bool replay_miss = false;
    for (const auto& f : result.failures) {
      std::cerr << "defner: no definition for '" << f.term << "': " << f.message << '\n';
      replay_miss = replay_miss || f.code == ErrorCode::kReplayMiss;
    }
    if (g.verbose) std::cerr << "wrote " << result.concepts.size() << " rows to " << out.string() << '\n';
    if (replay_miss) return kExitReplayMiss;
    // Same tolerance as experiment runs: more than 10% failed terms is a backend failure.
    const std::size_t n_terms = result.concepts.size() + result.failures.size();
    return result.failures.size() * 10 > n_terms ? kExitBackend : kExitOk;
  } catch (const Error& e) {
    return fail(exit_code_for(e.code()), e.what());
  }
}

// --- report ------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
  try {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    const std::vector<ReportRow> rows = load_report_rows(paths);
    const bool with_baseline = rows.size() > 1;
    std::cout << render_report_table(rows, with_baseline);
    if (!out.empty()) write_report(rows, with_baseline, out);
    return kExitOk;
  } catch (const Error& e) {
    return fail(kExitConfig, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Definition-augmented biomedical entity extraction experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  auto* record = app.add_flag("--record", g.record, "Record responses into the cache");
  auto* replay = app.add_flag("--replay", g.replay, "Serve responses only from the cache");
  record->excludes(replay);
  app.add_option("--concurrency", g.concurrency, "Bound on concurrent requests");
  app.add_flag("-v,--verbose", g.verbose, "Progress output on stderr");

  std::string config_path;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config")->required();
  run->add_option("-o,--out", run_out, "Run directory (default runs/<name>)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a predictions file");
  eval->add_option("--predictions", ev.predictions)->required();
  eval->add_option("--dataset", ev.dataset)->required();
  eval->add_option("--schema", ev.schema)->required();
  eval->add_option("-o,--out", ev.out, "Directory for metrics, taxonomy and audit files");
  eval->add_flag("--type-insensitive", ev.type_insensitive);
  eval->add_flag("--case-sensitive", ev.case_sensitive);
  eval->add_flag("--keep-whitespace", ev.keep_whitespace);
  eval->add_flag("--keep-punct", ev.keep_punct);
  eval->add_option("--audit-sample", ev.audit, "Sample size for audit.csv (0 = all)");
  eval->add_option("--seed", ev.seed, "Audit sampling seed");

  std::string link_text;
  std::string link_file;
  std::string link_kb;
  std::string link_allowlist;
  double threshold = kDefaultLinkThreshold;
  auto* link = app.add_subcommand("link", "List linked mentions in a text");
  auto* text_opt = link->add_option("--text", link_text);
  auto* file_opt = link->add_option("--file", link_file);
  text_opt->excludes(file_opt);
  link->add_option("--kb", link_kb)->required();
  link->add_option("--allowlist", link_allowlist);
  link->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));

  GenDefsArgs gd;
  auto* gen = app.add_subcommand("gen-defs", "Generate definitions and append GENERATED snapshot rows");
  gen->add_option("--terms", gd.terms, "One term per line")->required();
  gen->add_option("-o,--out", gd.out, "Snapshot TSV to append to")->required();
  gen->add_option("--backend", gd.backend, "OPENAI_HTTP, ANTHROPIC_HTTP, OPENAI_COMPAT_HTTP, SCRIPTED or REPLAY");
  gen->add_option("--model", gd.model);
  gen->add_option("--base-url", gd.base_url);
  gen->add_option("--script", gd.script, "Response script for SCRIPTED");
  gen->add_option("--templates", gd.templates, "Template override directory");

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Compare run directories; the first is the baseline");
  report->add_option("runs", report_dirs)->required();
  report->add_option("-o,--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, run_out, g);
    if (*eval) return cmd_eval(ev);
    if (*link) return cmd_link(link_text, link_file, link_kb, link_allowlist, threshold);
    if (*gen) return cmd_gen_defs(gd, g);
    if (*report) return cmd_report(report_dirs, report_out);
  } catch (const std::exception& e) {
    return fail(kExitConfig, e.what());
  }
  return kExitConfig;
}
