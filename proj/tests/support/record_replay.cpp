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

// Re-records the replay cache under <fixtures>/replay/cache from the
// simulated model and pins each run's metrics.json next to it.
//
//   record_replay <fixtures-dir>

#include <filesystem>
#include <iostream>

#include "defner/corpus.hpp"
#include "defner/experiment.hpp"
#include "sim_backend.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: record_replay <fixtures-dir>\n";
    return 2;
  }
  const fs::path fixtures = argv[1];
  const fs::path replay = fixtures / "replay";
  fs::remove_all(replay / "cache");
  fs::create_directories(replay / "pinned");
  const auto cdr = defner::load_dataset(fixtures / "cdr.jsonl", fixtures / "cdr.schema.json");
  const fs::path scratch = fs::temp_directory_path() / "defner-record";
  fs::remove_all(scratch);

  for (const char* name : {"none", "zs_def", "ip_def"}) {
    const auto config = defner::load_config(replay / (std::string(name) + ".json"));
    defner::RunOptions opts;
    opts.run_dir = scratch / name;
    opts.cache_mode = defner::CacheMode::kRecord;
    opts.backend = std::make_unique<defner::testing::SimBackend>(std::vector<defner::Dataset>{cdr},
                                                                 defner::testing::SimBackend::default_distractors());
    const auto result = defner::run_experiment(config, std::move(opts));
    if (result.exit_code != 0) {
      std::cerr << name << ": " << result.message << "\n";
      return result.exit_code;
    }
    fs::copy_file(scratch / name / "metrics.json", replay / "pinned" / (std::string(name) + ".metrics.json"),
                  fs::copy_options::overwrite_existing);
    std::cout << name << ": final f1 " << result.metrics["aggregate"]["final"]["f1"]["mean"] << "\n";
  }
  fs::remove_all(scratch);
  return 0;
}
