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

// Strict entity-level scoring, seed aggregation, error taxonomy and reports.

#ifndef DEFNER_EVAL_HPP_
#define DEFNER_EVAL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "defner/corpus.hpp"
#include "defner/extraction.hpp"
#include "defner/text.hpp"

namespace defner {

struct MatchPolicy {
  bool lowercase = true;
  bool collapse_whitespace = true;
  bool strip_edge_punct = true;
  bool type_sensitive = true;

  // Open-schema datasets are scored type-insensitively.
  static MatchPolicy for_schema(const DatasetSchema& schema);
  text::NormalizeOptions normalize_options() const { return {lowercase, collapse_whitespace, strip_edge_punct}; }
};

// (normalized surface, type); type is empty when the policy ignores types.
using EntityKey = std::pair<std::string, std::string>;

// Normalized, de-duplicated keys. Surfaces that normalize to nothing are
// dropped.
std::set<EntityKey> entity_keys(const std::vector<TypedEntity>& entities, const MatchPolicy& policy);

struct Metrics {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // Zero denominators give 0, except tp = fp = fn = 0 which is P = R = F1 = 1.
  static Metrics from_counts(int64_t tp, int64_t fp, int64_t fn);
  bool operator==(const Metrics&) const = default;
};

struct Prediction {
  std::string id;
  ExtractionSet set;
};

// Counts for a single instance.
Metrics instance_counts(const std::vector<TypedEntity>& pred, const std::vector<TypedEntity>& gold,
                        const MatchPolicy& policy);

// Micro-averaged over instances aligned by id. Throws kUnalignedIds when the
// id sets differ or an id repeats.
Metrics strict_prf(const std::vector<Prediction>& preds, const std::vector<GoldInstance>& golds,
                   const MatchPolicy& policy);

enum class ErrorCategory { kTypeMismatch, kBoundary, kExtra, kMissing };
inline constexpr std::array<ErrorCategory, 4> kAllErrorCategories = {
    ErrorCategory::kTypeMismatch, ErrorCategory::kBoundary, ErrorCategory::kExtra, ErrorCategory::kMissing};

std::string_view to_string(ErrorCategory category);

struct ErrorClassification {
  // The prediction for TYPE_MISMATCH, BOUNDARY and EXTRA; the gold for MISSING.
  TypedEntity entity;
  ErrorCategory category = ErrorCategory::kExtra;
  // The consumed gold of a TYPE_MISMATCH or BOUNDARY pair.
  std::optional<TypedEntity> counterpart;
};

// Exact matches are removed, then pairs are consumed greedily in sorted-key
// order: equal surface with different type, then containment or a shared
// token. Leftover predictions are EXTRA, leftover golds MISSING. Entities
// carry normalized surfaces.
std::vector<ErrorClassification> classify_errors(const std::vector<TypedEntity>& pred,
                                                 const std::vector<TypedEntity>& gold, const MatchPolicy& policy);

struct ErrorDistribution {
  std::array<double, 4> percent{};  // indexed like kAllErrorCategories
  std::array<std::size_t, 4> count{};
  std::size_t total = 0;
  bool empty() const { return total == 0; }
  double operator[](ErrorCategory c) const { return percent[static_cast<std::size_t>(c)]; }
};

ErrorDistribution error_distribution(const std::vector<ErrorClassification>& classifications);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

// Throws kInvalidArgument for an empty input.
MetricStats mean_stddev(const std::vector<double>& values);

struct SeedAggregate {
  MetricStats precision;
  MetricStats recall;
  MetricStats f1;
  std::size_t n_seeds = 0;
};

SeedAggregate aggregate_seeds(const std::vector<Metrics>& per_seed);

nlohmann::ordered_json to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SeedAggregate& a);
SeedAggregate seed_aggregate_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ErrorDistribution& d);

// Percent-scale values rounded to hundredths, e.g. "76.19".
std::string format_percent(double value);
// Signed difference of the two values each rounded to hundredths, "+5.27".
std::string format_delta(double baseline, double variant);

struct ReportRow {
  std::string name;
  SeedAggregate aggregate;  // F1 on the [0, 1] scale
};

// Writes <prefix>.csv and <prefix>.txt. The first row is the baseline when
// with_baseline is set; every other row then shows "F1 (+delta)".
void write_report(const std::vector<ReportRow>& rows, bool with_baseline, const std::filesystem::path& out_dir,
                  const std::string& prefix = "report");
std::string render_report_table(const std::vector<ReportRow>& rows, bool with_baseline);

// Line-delimited {id, entities:[{surface, type}], parse_status}.
void write_predictions(std::ostream& out, const std::vector<Prediction>& preds);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

// CSV of id,entity,type,kind with kind fp or fn for human review. All false
// positives and negatives in id order, or a seeded sample of max_rows of them
// (kept in id order) when max_rows is non-zero.
void write_audit_csv(std::ostream& out, const std::vector<Prediction>& preds, const std::vector<GoldInstance>& golds,
                     const MatchPolicy& policy, std::size_t max_rows = 0, uint64_t seed = 0);

}  // namespace defner

#endif  // DEFNER_EVAL_HPP_
