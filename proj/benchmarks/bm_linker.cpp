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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "defner/corpus.hpp"
#include "defner/kb.hpp"

namespace {

const std::filesystem::path kFixtures = DEFNER_FIXTURES_DIR;

std::vector<std::string> passages() {
  std::vector<std::string> out;
  for (const char* name : {"cdr", "ncbi"}) {
    const auto ds = defner::load_dataset(kFixtures / (std::string(name) + ".jsonl"),
                                         kFixtures / (std::string(name) + ".schema.json"));
    for (const auto& g : ds.test) out.push_back(g.document.text);
  }
  return out;
}

void BM_LinkPassage(benchmark::State& state) {
  const auto kb = defner::load_kb(kFixtures / "kb.tsv");
  const auto texts = passages();
  const defner::DictionaryLinker linker(kb, static_cast<double>(state.range(0)) / 100.0);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(linker.link(texts[i++ % texts.size()], defner::SemanticTypeAllowlist::default_list()));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LinkPassage)->Arg(70)->Arg(90);

void BM_LoadKb(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(defner::load_kb(kFixtures / "kb.tsv"));
}
BENCHMARK(BM_LoadKb);

void BM_LookupDefinition(benchmark::State& state) {
  const auto kb = defner::load_kb(kFixtures / "kb.tsv");
  for (auto _ : state) benchmark::DoNotOptimize(defner::lookup_definition("Cardiovascular Depression", kb));
}
BENCHMARK(BM_LookupDefinition);

}  // namespace
