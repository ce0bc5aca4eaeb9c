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

// End-to-end experiment runs: configuration, orchestration across seeds and
// instances, and the run directory.
//
// Run directory (single seed):
//   config.json  traces/<id>.json  predictions.jsonl  metrics.json
//   report.csv   report.txt        usage.json
// With several seeds, traces/, predictions.jsonl and a per-seed metrics.json
// live under seed_<seed>/ and the top-level metrics.json aggregates them.

#ifndef DEFNER_EXPERIMENT_HPP_
#define DEFNER_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "defner/ablate.hpp"
#include "defner/augment.hpp"
#include "defner/eval.hpp"
#include "defner/kb.hpp"
#include "defner/llm_gateway.hpp"
#include "defner/prompting.hpp"

namespace defner {

enum class ExtractorKind { kLlm, kLinker };

struct BackendConfig {
  BackendKind kind = BackendKind::kScripted;
  std::string model_id = "default";
  std::optional<std::string> base_url;
  std::optional<std::filesystem::path> script;
  double requests_per_minute = 60.0;
};

struct AblationConfig {
  AblationMode mode = AblationMode::kOnlyEnts;
  std::optional<std::filesystem::path> donor_dataset;
  std::optional<std::filesystem::path> donor_schema;
};

struct ExperimentConfig {
  std::string name;
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::optional<std::filesystem::path> kb;
  std::optional<std::filesystem::path> allowlist;
  std::optional<ConceptSource> kb_source;
  BackendConfig backend;
  ExtractorKind extractor = ExtractorKind::kLlm;
  InputFormat input_format = InputFormat::kText;
  OutputFormat output_format = OutputFormat::kJson;
  std::size_t k = 0;
  SelectionStrategy selection = SelectionStrategy::kRandomFixed;
  std::vector<uint64_t> seeds{1};
  AugmentationMode augmentation = AugmentationMode::kNone;
  std::optional<AblationConfig> ablation;
  std::optional<std::size_t> subsample_n;
  uint64_t subsample_seed = 0;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t concurrency = 4;
  bool include_candidates = true;
  double link_threshold = kDefaultLinkThreshold;
  std::map<std::string, std::string> tui_label_map;
  std::optional<std::filesystem::path> templates;
};

// Relative paths resolve against base_dir. Unknown keys and invalid
// combinations throw kConfig.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Structural checks that need no file access.
void validate_config(const ExperimentConfig& config);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

enum class CacheMode { kAuto, kRecord, kReplay };

struct RunOptions {
  std::filesystem::path run_dir;
  CacheMode cache_mode = CacheMode::kAuto;
  std::optional<std::filesystem::path> cache_dir;  // overrides the config
  std::optional<std::size_t> concurrency;          // overrides the config
  // Replaces the configured backend (unless replaying), e.g. a simulator.
  std::unique_ptr<Backend> backend;
  std::ostream* log = nullptr;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitReplayMiss = 4;

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::filesystem::path run_dir;
  std::size_t instances = 0;           // per seed
  std::size_t gateway_failures = 0;    // instance runs, all seeds
  std::size_t replay_misses = 0;
  std::size_t resumed = 0;
  nlohmann::ordered_json metrics;      // contents of metrics.json on success
};

// Library errors are mapped to exit codes: configuration and data problems
// -> 2, gateway failures above 10% of instances -> 3, any replay miss -> 4.
RunResult run_experiment(const ExperimentConfig& config, RunOptions options);

int exit_code_for(ErrorCode code);

// Builds the backend a config names. SCRIPTED reads config.backend.script,
// REPLAY reads cache_dir, HTTP kinds read credentials from the environment.
std::unique_ptr<Backend> make_backend(const BackendConfig& backend, const std::optional<std::filesystem::path>& cache_dir);

// Combined table over run directories; the first is the baseline when there
// are several. Throws kConfig when a metrics.json is missing.
std::vector<ReportRow> load_report_rows(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace defner

#endif  // DEFNER_EXPERIMENT_HPP_
