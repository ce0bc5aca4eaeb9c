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

// Acceptance suite: one PASS/FAIL line per criterion, each under a time limit.
//
//   defner_acceptance [path-to-defner-executable]

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "defner/ablate.hpp"
#include "defner/eval.hpp"
#include "defner/experiment.hpp"
#include "defner/kb.hpp"
#include "defner/parsing.hpp"
#include "defner/prompting.hpp"
#include "defner/rng.hpp"
#include "defner/text.hpp"
#include "sim_backend.hpp"

namespace fs = std::filesystem;
using namespace defner;

namespace {

// Tolerances and limits.
constexpr double kExact = 0.0;
constexpr double kPercentSumTolerance = 0.01;
constexpr double kSeedStatTolerance = 1e-12;

constexpr int kOraclePairs = 1000;
constexpr int kMaxEntitiesPerSide = 8;
constexpr int kMaxTypes = 3;
constexpr int kMinRoundTripInstances = 50;
constexpr int kMinMutationFixtures = 20;
constexpr int kDerangementBundles = 500;
constexpr int kTaxonomyPairs = 500;
constexpr std::size_t kMinKbConcepts = 200;
constexpr std::size_t kLinkPassages = 100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kFixtures = DEFNER_FIXTURES_DIR;
std::string g_defner_exe;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("defner-acceptance-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// Random pred/gold pairs

const std::vector<std::string> kVocab = {"aspirin",   "heart attack", "renal failure", "pain",  "x-ray",
                                         "propofol",  "cardiac arrest", "AS",          "liver", "dose",
                                         "hepatitis", "lung carcinoma"};
const std::vector<std::string> kTypes = {"Chemicals", "Diseases", "Genes"};

std::string variant(const std::string& s, Rng& rng) {
  switch (rng.below(6)) {
    case 0: {
      std::string u = s;
      for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return u;
    }
    case 1: return " " + s + ".";
    case 2: {
      std::string d = s;
      const auto sp = d.find(' ');
      if (sp != std::string::npos) d.insert(sp, "  ");
      return d;
    }
    case 3: return "(" + s + ")";
    default: return s;
  }
}

std::vector<TypedEntity> random_side(Rng& rng, std::size_t n_types) {
  std::vector<TypedEntity> out;
  const auto n = rng.below(kMaxEntitiesPerSide + 1);
  for (uint64_t i = 0; i < n; ++i) {
    out.push_back({variant(kVocab[rng.below(kVocab.size())], rng), kTypes[rng.below(n_types)]});
  }
  return out;
}

// Independent reference: ASCII folding, quadratic matching.
std::string oracle_norm(const std::string& s) {
  std::string collapsed;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::size_t b = 0;
  std::size_t e = collapsed.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(collapsed[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(collapsed[e - 1]))) --e;
  std::string out = collapsed.substr(b, e - b);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  while (!out.empty() && out.front() == ' ') out.erase(out.begin());
  return out;
}

struct Counts {
  int64_t tp = 0, fp = 0, fn = 0;
};

Counts oracle_counts(const std::vector<TypedEntity>& pred, const std::vector<TypedEntity>& gold, bool typed) {
  auto keys = [&](const std::vector<TypedEntity>& v) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : v) {
      std::pair<std::string, std::string> k{oracle_norm(e.surface), typed ? e.entity_type : ""};
      if (k.first.empty()) continue;
      bool seen = false;
      for (const auto& o : out) seen = seen || o == k;
      if (!seen) out.push_back(k);
    }
    return out;
  };
  const auto p = keys(pred);
  const auto g = keys(gold);
  Counts c;
  for (const auto& pk : p) {
    bool hit = false;
    for (const auto& gk : g) hit = hit || pk == gk;
    c.tp += hit ? 1 : 0;
  }
  c.fp = static_cast<int64_t>(p.size()) - c.tp;
  c.fn = static_cast<int64_t>(g.size()) - c.tp;
  return c;
}

void oracle_prf(const Counts& c, double& p, double& r, double& f) {
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
    p = r = f = 1.0;
    return;
  }
  p = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  f = static_cast<double>(2 * c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

bool same_metrics(const Metrics& m, const Counts& c) {
  double p = 0, r = 0, f = 0;
  oracle_prf(c, p, r, f);
  return m.tp == c.tp && m.fp == c.fp && m.fn == c.fn && std::abs(m.precision - p) <= kExact &&
         std::abs(m.recall - r) <= kExact && std::abs(m.f1 - f) <= kExact;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome ac1_scorer_oracle() {
  Rng rng(20240101);
  int mismatches = 0;
  for (bool typed : {true, false}) {
    MatchPolicy policy;
    policy.type_sensitive = typed;
    std::vector<Prediction> preds;
    std::vector<GoldInstance> golds;
    Counts total;
    for (int i = 0; i < kOraclePairs; ++i) {
      const std::size_t n_types = 1 + rng.below(kMaxTypes);
      const auto pred = random_side(rng, n_types);
      const auto gold = random_side(rng, n_types);
      const std::string id = "pair-" + std::to_string(i);
      Prediction p;
      p.id = id;
      p.set.entities = pred;
      preds.push_back(p);
      golds.push_back({{id, "t"}, gold});
      const auto single = strict_prf({p}, {golds.back()}, policy);
      const auto oc = oracle_counts(pred, gold, typed);
      if (!same_metrics(single, oc)) ++mismatches;
      total.tp += oc.tp;
      total.fp += oc.fp;
      total.fn += oc.fn;
    }
    std::reverse(preds.begin(), preds.end());
    if (!same_metrics(strict_prf(preds, golds, policy), total)) ++mismatches;
  }
  return {mismatches == 0,
          std::to_string(2 * kOraclePairs) + " pairs (typed and untyped) + 2 corpus totals, " +
              std::to_string(mismatches) + " mismatches"};
}

Outcome ac2_hand_metric() {
  Prediction p;
  p.id = "x";
  p.set.entities = {{"a", "T"}, {"b", "T"}, {"d", "T"}};
  const GoldInstance g{{"x", "t"}, {{"a", "T"}, {"b", "T"}, {"c", "T"}}};
  const auto m = strict_prf({p}, {g}, MatchPolicy{});
  const double third2 = 2.0 / 3.0;
  const bool ok = m.precision == third2 && m.recall == third2 && m.f1 == third2;
  std::ostringstream d;
  d << std::setprecision(17) << "P=" << m.precision << " R=" << m.recall << " F1=" << m.f1;
  return {ok, d.str()};
}

std::vector<std::pair<std::string, std::string>> norm_multiset(const std::vector<TypedEntity>& v) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : v) out.emplace_back(text::normalize(e.surface), e.entity_type);
  std::sort(out.begin(), out.end());
  return out;
}

Outcome ac3_round_trip() {
  int instances = 0;
  int failures = 0;
  std::set<std::string> schemas;
  for (const char* name : {"cdr", "ncbi", "medm", "chia"}) {
    const auto ds = load_dataset(kFixtures / (std::string(name) + ".jsonl"), kFixtures / (std::string(name) + ".schema.json"));
    schemas.insert(name);
    for (const auto* split : {&ds.train_pool, &ds.test}) {
      for (const auto& g : *split) {
        ++instances;
        for (auto fmt : {OutputFormat::kJson, OutputFormat::kCode, OutputFormat::kLinearized}) {
          const auto parsed = parse_output(render_target(g, fmt, ds.schema), ds.schema, fmt);
          if (parsed.status == ParseStatus::kFailed && !g.entities.empty()) ++failures;
          else if (norm_multiset(parsed.entities) != norm_multiset(g.entities)) ++failures;
        }
      }
    }
  }
  return {instances >= kMinRoundTripInstances && failures == 0,
          std::to_string(instances) + " instances x 3 formats over " + std::to_string(schemas.size()) +
              " schemas, " + std::to_string(failures) + " failures"};
}

Outcome ac4_repair() {
  const auto cdr = load_dataset(kFixtures / "cdr.jsonl", kFixtures / "cdr.schema.json");
  const auto ncbi = load_dataset(kFixtures / "ncbi.jsonl", kFixtures / "ncbi.schema.json");
  const std::vector<std::function<std::string(const std::string&)>> mutations = {
      [](const std::string& j) { return "```json\n" + j + "\n```"; },
      [](const std::string& j) { return "```\n" + j + "\n```"; },
      [](const std::string& j) { return "Here are the extracted entities:\n" + j; },
      [](const std::string& j) { return j + "\nLet me know if you need anything else."; },
      [](const std::string& j) { return "Sure! The answer is below.\n\n```json\n" + j + "\n```\nHope this helps."; },
      [](const std::string& j) { return "Answer: " + j; },
      [](const std::string& j) { return "The entities are " + j + " based on the text."; },
  };
  int fixtures = 0;
  int failures = 0;
  for (const Dataset* ds : {&cdr, &ncbi}) {
    for (std::size_t i = 0; i < 14; ++i) {
      const auto& g = ds->test[i];
      const std::string clean = render_target(g, OutputFormat::kJson, ds->schema);
      const auto reference = parse_json_output(clean, ds->schema);
      const auto mutated = parse_json_output(mutations[i % mutations.size()](clean), ds->schema);
      ++fixtures;
      if (reference.status != ParseStatus::kClean || mutated.status != ParseStatus::kRepaired ||
          norm_multiset(mutated.entities) != norm_multiset(reference.entities)) {
        ++failures;
      }
    }
  }
  return {fixtures >= kMinMutationFixtures && failures == 0,
          std::to_string(fixtures) + " mutations over " + std::to_string(mutations.size()) + " wrappers, " +
              std::to_string(failures) + " failures"};
}

const std::vector<std::string> kReplayModes = {"none", "zs_def", "ip_def"};

RunResult replay_run(const std::string& mode, const fs::path& run_dir) {
  const auto config = load_config(kFixtures / "replay" / (mode + ".json"));
  RunOptions o;
  o.run_dir = run_dir;
  o.cache_mode = CacheMode::kReplay;
  return run_experiment(config, std::move(o));
}

Outcome ac5_replay() {
  const auto root = scratch("replay");
  std::string detail;
  bool ok = true;
  for (const auto& mode : kReplayModes) {
    const auto r = replay_run(mode, root / mode);
    const bool same = r.exit_code == 0 &&
                      slurp(root / mode / "metrics.json") == slurp(kFixtures / "replay" / "pinned" / (mode + ".metrics.json"));
    ok = ok && same;
    std::ostringstream d;
    d << mode << (same ? " identical" : " DIFFERS") << " (F1 " << std::fixed << std::setprecision(2)
      << (r.exit_code == 0 ? 100.0 * r.metrics["aggregate"]["final"]["f1"]["mean"].get<double>() : 0.0) << ")";
    detail += (detail.empty() ? "" : ", ") + d.str();
    if (r.exit_code != 0) detail += " [" + r.message + "]";
  }
  return {ok, detail};
}

Outcome ac6_call_counts() {
  const auto root = scratch("calls");
  bool ok = true;
  std::string detail;
  for (const auto& mode : kReplayModes) {
    const auto r = replay_run(mode, root / mode);
    if (r.exit_code != 0) return {false, mode + ": " + r.message};
    std::size_t traces = 0;
    std::size_t bad = 0;
    std::size_t requests = 0;
    for (const auto& seed_dir : fs::directory_iterator(root / mode)) {
      if (!seed_dir.is_directory() || seed_dir.path().filename().string().rfind("seed_", 0) != 0) continue;
      for (const auto& f : fs::directory_iterator(seed_dir.path() / "traces")) {
        const auto t = run_trace_from_json(nlohmann::json::parse(slurp(f.path())));
        std::size_t expected = 1;
        if (mode == "zs_def") expected = 2;
        if (mode == "ip_def") expected = 1 + t.bundle.with_definitions();
        const bool user_turns_match = t.conversation.count(Role::kUser) == t.requests;
        if (t.requests != expected || !user_turns_match) ++bad;
        requests += t.requests;
        ++traces;
      }
    }
    ok = ok && bad == 0 && traces > 0;
    detail += (detail.empty() ? "" : ", ") + mode + " " + std::to_string(requests) + " req/" + std::to_string(traces) +
              " traces (" + std::to_string(bad) + " off)";
  }
  return {ok, detail};
}

Outcome ac7_fail_safe() {
  const auto cdr = load_dataset(kFixtures / "cdr.jsonl", kFixtures / "cdr.schema.json");
  auto sim = std::make_shared<testing::SimBackend>(std::vector<Dataset>{cdr}, testing::SimBackend::default_distractors());
  const auto root = scratch("failsafe");
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, std::size_t>> modes = {
      {"NONE", 0}, {"ZS_DEF", 0}, {"IP", 0}, {"IP_DEF", 0}, {"FS_DEF", 2}};
  for (const auto& [mode, k] : modes) {
    nlohmann::json j = {{"name", "failsafe"},
                        {"dataset", (kFixtures / "cdr.jsonl").string()},
                        {"schema", (kFixtures / "cdr.schema.json").string()},
                        {"kb", (kFixtures / "kb.tsv").string()},
                        {"backend", {{"kind", "SCRIPTED"}, {"model_id", "sim-1"}, {"script", "responder"}}},
                        {"augmentation", mode},
                        {"k", k},
                        {"seeds", {1, 2}},
                        {"subsample_n", 20}};
    RunOptions o;
    o.run_dir = root / mode;
    o.backend = std::make_unique<ScriptedBackend>(ScriptedBackend::Responder([sim](const ChatRequest& req) {
      if (req.messages.count(Role::kAssistant) > 0) return std::string("I am unable to revise the list right now.");
      return sim->complete(req).text;
    }));
    const auto r = run_experiment(parse_config(j), std::move(o));
    if (r.exit_code != 0) return {false, mode + ": " + r.message};
    bool same = r.metrics["aggregate"]["first_pass"] == r.metrics["aggregate"]["final"];
    for (const auto& s : r.metrics["per_seed"]) same = same && s["first_pass"] == s["final"];
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + mode + (same ? " equal" : " DIFFERENT");
  }
  return {ok, detail};
}

Outcome ac8_swap_def() {
  const auto cdr = load_dataset(kFixtures / "cdr.jsonl", kFixtures / "cdr.schema.json");
  const auto kb = load_kb(kFixtures / "kb.tsv");
  std::vector<std::string> defs;
  for (const auto& c : kb.concepts()) {
    if (c.definition && !c.definition->empty() && std::find(defs.begin(), defs.end(), *c.definition) == defs.end()) {
      defs.push_back(*c.definition);
    }
  }
  const AblationInputs in{cdr, nullptr, kb, SemanticTypeAllowlist::default_list()};
  Rng rng(8);
  int fixed_points = 0;
  int multiset_changes = 0;
  int perm_fixed = 0;
  for (int b = 0; b < kDerangementBundles; ++b) {
    const std::size_t n = 2 + rng.below(9);
    DefinitionBundle bundle;
    for (auto idx : rng.sample_indices(defs.size(), n)) {
      bundle.items.push_back({"term-" + std::to_string(idx), defs[idx], DefinitionOrigin::kExtracted, std::nullopt, "x"});
    }
    const auto& g = cdr.test[static_cast<std::size_t>(b) % cdr.test.size()];
    const auto v = variant_bundle(g, bundle, AblationMode::kSwapDef, in, static_cast<uint64_t>(b));
    std::vector<std::string> before;
    std::vector<std::string> after;
    for (std::size_t i = 0; i < n; ++i) {
      if (v.items[i].definition == bundle.items[i].definition) ++fixed_points;
      if (v.items[i].term != bundle.items[i].term) ++multiset_changes;
      before.push_back(bundle.items[i].definition);
      after.push_back(v.items[i].definition);
    }
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    if (before != after) ++multiset_changes;
    Rng prng(static_cast<uint64_t>(b));
    const auto p = seeded_derangement(n, prng);
    for (std::size_t i = 0; i < n; ++i) perm_fixed += p[i] == i ? 1 : 0;
  }
  return {fixed_points == 0 && multiset_changes == 0 && perm_fixed == 0,
          std::to_string(kDerangementBundles) + " bundles, " + std::to_string(fixed_points) + " fixed points, " +
              std::to_string(multiset_changes) + " multiset changes"};
}

Outcome ac9_taxonomy() {
  Rng rng(99);
  int violations = 0;
  double worst = 0.0;
  const MatchPolicy policy;
  for (int i = 0; i < kTaxonomyPairs; ++i) {
    const std::size_t n_types = 1 + rng.below(kMaxTypes);
    const auto pred = random_side(rng, n_types);
    const auto gold = random_side(rng, n_types);
    const auto pk = entity_keys(pred, policy);
    const auto gk = entity_keys(gold, policy);
    std::map<EntityKey, int> pred_seen;
    std::map<EntityKey, int> gold_seen;
    const auto cls = classify_errors(pred, gold, policy);
    for (const auto& c : cls) {
      const EntityKey k{c.entity.surface, c.entity.entity_type};
      if (c.category == ErrorCategory::kMissing) {
        ++gold_seen[k];
      } else {
        ++pred_seen[k];
        if (c.counterpart) ++gold_seen[{c.counterpart->surface, c.counterpart->entity_type}];
      }
    }
    for (const auto& k : pk) {
      const int expected = gk.count(k) ? 0 : 1;
      if (pred_seen[k] != expected) ++violations;
    }
    for (const auto& k : gk) {
      const int expected = pk.count(k) ? 0 : 1;
      if (gold_seen[k] != expected) ++violations;
    }
    if (pred_seen.size() > pk.size() || gold_seen.size() > gk.size()) ++violations;
    const auto dist = error_distribution(cls);
    if (!dist.empty()) {
      double sum = 0.0;
      for (double p : dist.percent) sum += p;
      worst = std::max(worst, std::abs(sum - 100.0));
    }
  }
  std::ostringstream d;
  d << kTaxonomyPairs << " pairs, " << violations << " partition violations, max |sum-100| = " << std::setprecision(3)
    << worst;
  return {violations == 0 && worst <= kPercentSumTolerance, d.str()};
}

Outcome ac10_seed_aggregation() {
  const auto s = mean_stddev({1.0, 2.0, 3.0});
  std::vector<Metrics> per_seed(3);
  for (int i = 0; i < 3; ++i) per_seed[static_cast<std::size_t>(i)].f1 = i + 1.0;
  const auto agg = aggregate_seeds(per_seed);
  const bool ok = std::abs(s.mean - 2.0) <= kSeedStatTolerance && std::abs(s.stddev - 1.0) <= kSeedStatTolerance &&
                  std::abs(agg.f1.mean - 2.0) <= kSeedStatTolerance &&
                  std::abs(agg.f1.stddev - 1.0) <= kSeedStatTolerance;
  std::ostringstream d;
  d << std::setprecision(17) << "mean=" << s.mean << " std=" << s.stddev;
  return {ok, d.str()};
}

Outcome ac11_linker() {
  const auto kb = load_kb(kFixtures / "kb.tsv");
  const auto kb_again = load_kb(kFixtures / "kb.tsv");
  const auto& allow = SemanticTypeAllowlist::default_list();
  std::vector<std::string> passages;
  for (const char* name : {"cdr", "ncbi", "medm"}) {
    const auto ds = load_dataset(kFixtures / (std::string(name) + ".jsonl"), kFixtures / (std::string(name) + ".schema.json"));
    for (const auto* split : {&ds.test, &ds.train_pool}) {
      for (const auto& g : *split) {
        if (passages.size() < kLinkPassages) passages.push_back(g.document.text);
      }
    }
  }
  std::size_t mentions = 0;
  std::size_t exact = 0;
  int nondeterministic = 0;
  int bad_exact = 0;
  int disallowed = 0;
  std::size_t passages_with_disallowed_alias = 0;
  for (const auto& p : passages) {
    const auto a = link_mentions(p, kb, allow);
    const auto b = link_mentions(p, kb, allow);
    const auto c = DictionaryLinker(kb_again).link(p, allow);
    if (a != b || a != c) ++nondeterministic;
    for (const auto& m : a) {
      ++mentions;
      const auto* concept_row = kb.find(m.cui);
      if (concept_row == nullptr || !allow.contains(concept_row->tui) || !allow.contains(m.tui)) ++disallowed;
      const auto* hits = kb.lookup_alias(text::normalize(m.span_text));
      const bool is_exact = hits != nullptr && std::any_of(hits->begin(), hits->end(), [&](std::size_t i) {
                              return kb.concepts()[i].cui == m.cui;
                            });
      if (is_exact) {
        ++exact;
        if (m.score != 1.0) ++bad_exact;
      } else if (m.score >= 1.0) {
        ++bad_exact;
      }
    }
    const auto all = link_mentions(p, kb, SemanticTypeAllowlist(std::set<std::string>{
                                                  "T002", "T015", "T023", "T033", "T071", "T081", "T109", "T201"}));
    if (!all.empty()) ++passages_with_disallowed_alias;
  }
  const bool ok = kb.size() >= kMinKbConcepts && passages.size() == kLinkPassages && nondeterministic == 0 &&
                  bad_exact == 0 && disallowed == 0 && exact > 0 && passages_with_disallowed_alias > 0;
  return {ok, std::to_string(kb.size()) + " concepts, " + std::to_string(allow.codes().size()) + "-code allowlist, " +
                  std::to_string(passages.size()) + " passages, " + std::to_string(mentions) + " mentions (" +
                  std::to_string(exact) + " exact), " + std::to_string(passages_with_disallowed_alias) +
                  " passages with filtered types, " + std::to_string(nondeterministic + bad_exact + disallowed) +
                  " violations"};
}

Outcome ac12_cli_determinism() {
  if (g_defner_exe.empty()) return {false, "defner executable not given"};
  const auto root = scratch("cli");
  std::vector<std::string> files;
  for (int i = 0; i < 2; ++i) {
    const auto out = root / ("run" + std::to_string(i));
    const std::string cmd = "\"" + g_defner_exe + "\" --replay run \"" + (kFixtures / "replay" / "ip_def.json").string() +
                            "\" -o \"" + out.string() + "\" > \"" + (root / ("log" + std::to_string(i))).string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, "defner run exited with " + std::to_string(rc) + ": " + slurp(root / ("log" + std::to_string(i)))};
  }
  int compared = 0;
  for (const auto& seed_dir : fs::directory_iterator(root / "run0")) {
    if (!seed_dir.is_directory()) continue;
    const auto rel = seed_dir.path().filename() / "predictions.jsonl";
    if (!fs::exists(root / "run0" / rel)) continue;
    const auto a = slurp(root / "run0" / rel);
    const auto b = slurp(root / "run1" / rel);
    if (a.empty() || a != b) return {false, rel.string() + " differs"};
    ++compared;
  }
  return {compared > 0, std::to_string(compared) + " predictions.jsonl files byte-identical"};
}

struct Criterion {
  const char* id;
  const char* title;
  double limit_seconds;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_defner_exe = argv[1];
  const std::vector<Criterion> criteria = {
      {"AC1", "scorer oracle equivalence", 5.0, ac1_scorer_oracle},
      {"AC2", "hand-checked metric", 1.0, ac2_hand_metric},
      {"AC3", "parser round-trip", 5.0, ac3_round_trip},
      {"AC4", "repair pipeline", 2.0, ac4_repair},
      {"AC5", "replay end-to-end", 10.0, ac5_replay},
      {"AC6", "call-count contract", 10.0, ac6_call_counts},
      {"AC7", "fail-safe follow-ups", 5.0, ac7_fail_safe},
      {"AC8", "swap-def derangement", 2.0, ac8_swap_def},
      {"AC9", "taxonomy partition", 2.0, ac9_taxonomy},
      {"AC10", "seed aggregation", 1.0, ac10_seed_aggregation},
      {"AC11", "linker determinism and allowlist", 5.0, ac11_linker},
      {"AC12", "pipeline determinism", 20.0, ac12_cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << c.id << " " << c.title << ": " << o.detail << " [" << std::fixed
              << std::setprecision(3) << secs << " s, limit " << std::setprecision(0) << c.limit_seconds << " s"
              << (in_time ? "" : ", too slow") << "]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
