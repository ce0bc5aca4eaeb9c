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

#include "defner/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "defner/error.hpp"
#include "defner/rng.hpp"

namespace defner {

using nlohmann::json;
using nlohmann::ordered_json;

MatchPolicy MatchPolicy::for_schema(const DatasetSchema& schema) {
  MatchPolicy p;
  p.type_sensitive = !schema.open_schema;
  return p;
}

std::set<EntityKey> entity_keys(const std::vector<TypedEntity>& entities, const MatchPolicy& policy) {
  std::set<EntityKey> keys;
  const auto opts = policy.normalize_options();
  for (const auto& e : entities) {
    std::string surface = text::normalize(e.surface, opts);
    if (surface.empty()) continue;
    keys.emplace(std::move(surface), policy.type_sensitive ? e.entity_type : std::string());
  }
  return keys;
}

Metrics Metrics::from_counts(int64_t tp, int64_t fp, int64_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  if (tp == 0 && fp == 0 && fn == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    return m;
  }
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  // Equal to 2PR / (P + R), with a single rounding.
  m.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return m;
}

Metrics instance_counts(const std::vector<TypedEntity>& pred, const std::vector<TypedEntity>& gold,
                        const MatchPolicy& policy) {
  const auto p = entity_keys(pred, policy);
  const auto g = entity_keys(gold, policy);
  int64_t tp = 0;
  for (const auto& k : p) tp += g.count(k) ? 1 : 0;
  return Metrics::from_counts(tp, static_cast<int64_t>(p.size()) - tp, static_cast<int64_t>(g.size()) - tp);
}

Metrics strict_prf(const std::vector<Prediction>& preds, const std::vector<GoldInstance>& golds,
                   const MatchPolicy& policy) {
  std::map<std::string, const ExtractionSet*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.id, &p.set).second) throw Error(ErrorCode::kUnalignedIds, "prediction id '" + p.id + "' repeats");
  }
  if (by_id.size() != golds.size()) {
    throw Error(ErrorCode::kUnalignedIds, std::to_string(preds.size()) + " predictions for " +
                                              std::to_string(golds.size()) + " gold instances");
  }
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  for (const auto& g : golds) {
    auto it = by_id.find(g.id());
    if (it == by_id.end()) throw Error(ErrorCode::kUnalignedIds, "no prediction for '" + g.id() + "'");
    const Metrics m = instance_counts(it->second->entities, g.entities, policy);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
  return Metrics::from_counts(tp, fp, fn);
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kTypeMismatch: return "TYPE_MISMATCH";
    case ErrorCategory::kBoundary: return "BOUNDARY";
    case ErrorCategory::kExtra: return "EXTRA";
    case ErrorCategory::kMissing: return "MISSING";
  }
  return "EXTRA";
}

namespace {

bool share_token(const std::string& a, const std::string& b) {
  const auto ta = text::split_whitespace(a);
  const auto tb = text::split_whitespace(b);
  for (const auto& t : ta) {
    if (std::find(tb.begin(), tb.end(), t) != tb.end()) return true;
  }
  return false;
}

bool boundary_related(const std::string& a, const std::string& b) {
  return a.find(b) != std::string::npos || b.find(a) != std::string::npos || share_token(a, b);
}

}  // namespace

std::vector<ErrorClassification> classify_errors(const std::vector<TypedEntity>& pred,
                                                 const std::vector<TypedEntity>& gold, const MatchPolicy& policy) {
  const auto pk = entity_keys(pred, policy);
  const auto gk = entity_keys(gold, policy);
  std::vector<EntityKey> p;
  std::vector<EntityKey> g;
  std::set_difference(pk.begin(), pk.end(), gk.begin(), gk.end(), std::back_inserter(p));
  std::set_difference(gk.begin(), gk.end(), pk.begin(), pk.end(), std::back_inserter(g));
  std::vector<bool> p_used(p.size(), false);
  std::vector<bool> g_used(g.size(), false);
  auto entity = [](const EntityKey& k) { return TypedEntity{k.first, k.second}; };

  std::vector<ErrorClassification> out;
  auto pair_pass = [&](ErrorCategory category, auto&& related) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p_used[i]) continue;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g_used[j] || !related(p[i], g[j])) continue;
        p_used[i] = g_used[j] = true;
        out.push_back({entity(p[i]), category, entity(g[j])});
        break;
      }
    }
  };
  pair_pass(ErrorCategory::kTypeMismatch,
            [](const EntityKey& a, const EntityKey& b) { return a.first == b.first && a.second != b.second; });
  pair_pass(ErrorCategory::kBoundary,
            [](const EntityKey& a, const EntityKey& b) { return boundary_related(a.first, b.first); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p_used[i]) out.push_back({entity(p[i]), ErrorCategory::kExtra, std::nullopt});
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!g_used[j]) out.push_back({entity(g[j]), ErrorCategory::kMissing, std::nullopt});
  }
  return out;
}

ErrorDistribution error_distribution(const std::vector<ErrorClassification>& classifications) {
  ErrorDistribution d;
  for (const auto& c : classifications) ++d.count[static_cast<std::size_t>(c.category)];
  d.total = classifications.size();
  if (d.total == 0) return d;
  for (std::size_t i = 0; i < d.count.size(); ++i) {
    d.percent[i] = 100.0 * static_cast<double>(d.count[i]) / static_cast<double>(d.total);
  }
  return d;
}

MetricStats mean_stddev(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "mean of an empty sample");
  MetricStats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

SeedAggregate aggregate_seeds(const std::vector<Metrics>& per_seed) {
  std::vector<double> p;
  std::vector<double> r;
  std::vector<double> f;
  for (const auto& m : per_seed) {
    p.push_back(m.precision);
    r.push_back(m.recall);
    f.push_back(m.f1);
  }
  SeedAggregate a;
  a.precision = mean_stddev(p);
  a.recall = mean_stddev(r);
  a.f1 = mean_stddev(f);
  a.n_seeds = per_seed.size();
  return a;
}

ordered_json to_json(const Metrics& m) {
  return {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

Metrics metrics_from_json(const json& j) {
  Metrics m = Metrics::from_counts(j.at("tp").get<int64_t>(), j.at("fp").get<int64_t>(), j.at("fn").get<int64_t>());
  return m;
}

namespace {

ordered_json stats_json(const MetricStats& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

MetricStats stats_from_json(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

}  // namespace

ordered_json to_json(const SeedAggregate& a) {
  return {{"n_seeds", a.n_seeds},
          {"precision", stats_json(a.precision)},
          {"recall", stats_json(a.recall)},
          {"f1", stats_json(a.f1)}};
}

SeedAggregate seed_aggregate_from_json(const json& j) {
  SeedAggregate a;
  a.n_seeds = j.at("n_seeds").get<std::size_t>();
  a.precision = stats_from_json(j.at("precision"));
  a.recall = stats_from_json(j.at("recall"));
  a.f1 = stats_from_json(j.at("f1"));
  return a;
}

ordered_json to_json(const ErrorDistribution& d) {
  ordered_json percent = ordered_json::object();
  ordered_json count = ordered_json::object();
  for (std::size_t i = 0; i < kAllErrorCategories.size(); ++i) {
    const std::string name(to_string(kAllErrorCategories[i]));
    percent[name] = d.percent[i];
    count[name] = d.count[i];
  }
  return {{"total", d.total}, {"empty", d.empty()}, {"percent", percent}, {"count", count}};
}

namespace {

long long hundredths(double value) { return std::llround(value * 100.0); }

std::string from_hundredths(long long h) {
  std::ostringstream out;
  const long long a = h < 0 ? -h : h;
  out << (h < 0 ? "-" : "") << a / 100 << '.' << std::setw(2) << std::setfill('0') << a % 100;
  return out.str();
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_percent(double value) { return from_hundredths(hundredths(value)); }

std::string format_delta(double baseline, double variant) {
  const long long d = hundredths(variant) - hundredths(baseline);
  return (d >= 0 ? "+" : "") + from_hundredths(d);
}

std::string render_report_table(const std::vector<ReportRow>& rows, bool with_baseline) {
  std::vector<std::array<std::string, 4>> cells;
  cells.push_back({"Condition", "F1", "Std", "Seeds"});
  const double base = rows.empty() ? 0.0 : rows.front().aggregate.f1.mean * 100.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& a = rows[i].aggregate;
    std::string f1 = format_percent(a.f1.mean * 100.0);
    if (with_baseline && i > 0) f1 += " (" + format_delta(base, a.f1.mean * 100.0) + ")";
    cells.push_back({rows[i].name, f1, format_percent(a.f1.stddev * 100.0), std::to_string(a.n_seeds)});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& r : cells) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[r][c];
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 6;
      for (auto w : width) total += w;
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

void write_report(const std::vector<ReportRow>& rows, bool with_baseline, const std::filesystem::path& out_dir,
                  const std::string& prefix) {
  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / (prefix + ".csv");
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write " + csv_path.string());
  csv << "condition,n_seeds,precision,precision_std,recall,recall_std,f1,f1_std,delta\n";
  const double base = rows.empty() ? 0.0 : rows.front().aggregate.f1.mean * 100.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& a = rows[i].aggregate;
    csv << csv_field(rows[i].name) << ',' << a.n_seeds << ',' << format_percent(a.precision.mean * 100.0) << ','
        << format_percent(a.precision.stddev * 100.0) << ',' << format_percent(a.recall.mean * 100.0) << ','
        << format_percent(a.recall.stddev * 100.0) << ',' << format_percent(a.f1.mean * 100.0) << ','
        << format_percent(a.f1.stddev * 100.0) << ','
        << (with_baseline && i > 0 ? format_delta(base, a.f1.mean * 100.0) : std::string()) << '\n';
  }
  if (!csv) throw Error(ErrorCode::kIo, "write failed for " + csv_path.string());
  const auto txt_path = out_dir / (prefix + ".txt");
  std::ofstream txt(txt_path, std::ios::binary);
  txt << render_report_table(rows, with_baseline);
  if (!txt) throw Error(ErrorCode::kIo, "cannot write " + txt_path.string());
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& preds) {
  for (const auto& p : preds) {
    ordered_json entities = ordered_json::array();
    for (const auto& e : p.set.entities) entities.push_back({{"surface", e.surface}, {"type", e.entity_type}});
    ordered_json line{{"id", p.id}, {"entities", entities}, {"parse_status", std::string(to_string(p.set.status))}};
    out << line.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open predictions " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      for (const auto& e : j.at("entities")) {
        p.set.entities.push_back({e.at("surface").get<std::string>(), e.at("type").get<std::string>()});
      }
      p.set.status = parse_status_from_string(j.value("parse_status", std::string("CLEAN")));
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, "predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_audit_csv(std::ostream& out, const std::vector<Prediction>& preds, const std::vector<GoldInstance>& golds,
                     const MatchPolicy& policy, std::size_t max_rows, uint64_t seed) {
  std::map<std::string, const ExtractionSet*> by_id;
  for (const auto& p : preds) by_id.emplace(p.id, &p.set);
  std::vector<const GoldInstance*> ordered;
  for (const auto& g : golds) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id() < b->id(); });

  struct Row {
    std::string id;
    EntityKey key;
    const char* kind;
  };
  std::vector<Row> rows;
  static const ExtractionSet kEmpty;
  for (const GoldInstance* g : ordered) {
    auto it = by_id.find(g->id());
    const ExtractionSet& set = it == by_id.end() ? kEmpty : *it->second;
    const auto pk = entity_keys(set.entities, policy);
    const auto gk = entity_keys(g->entities, policy);
    for (const auto& k : pk) {
      if (!gk.count(k)) rows.push_back({g->id(), k, "fp"});
    }
    for (const auto& k : gk) {
      if (!pk.count(k)) rows.push_back({g->id(), k, "fn"});
    }
  }
  if (max_rows > 0 && rows.size() > max_rows) {
    Rng rng(mix_seed(seed, fnv1a64("audit")));
    auto picks = rng.sample_indices(rows.size(), max_rows);
    std::sort(picks.begin(), picks.end());
    std::vector<Row> sampled;
    for (auto i : picks) sampled.push_back(rows[i]);
    rows = std::move(sampled);
  }
  out << "id,entity,type,kind\n";
  for (const auto& r : rows) {
    out << csv_field(r.id) << ',' << csv_field(r.key.first) << ',' << csv_field(r.key.second) << ',' << r.kind << '\n';
  }
}

}  // namespace defner
