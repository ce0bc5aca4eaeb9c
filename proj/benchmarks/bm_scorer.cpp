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

#include "defner/eval.hpp"
#include "defner/rng.hpp"

namespace {

std::vector<defner::TypedEntity> side(defner::Rng& rng, std::size_t n) {
  static const std::vector<std::string> types = {"Chemicals", "Diseases", "Genes"};
  std::vector<defner::TypedEntity> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"Term " + std::to_string(rng.below(4 * n + 1)), types[rng.below(types.size())]});
  }
  return out;
}

struct Corpus {
  std::vector<defner::Prediction> preds;
  std::vector<defner::GoldInstance> golds;
};

Corpus corpus(std::size_t instances) {
  defner::Rng rng(5);
  Corpus c;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::string id = "i" + std::to_string(i);
    defner::Prediction p;
    p.id = id;
    p.set.entities = side(rng, 8);
    c.preds.push_back(std::move(p));
    c.golds.push_back({{id, "t"}, side(rng, 8)});
  }
  return c;
}

void BM_StrictPrf(benchmark::State& state) {
  const auto c = corpus(static_cast<std::size_t>(state.range(0)));
  const defner::MatchPolicy policy;
  for (auto _ : state) benchmark::DoNotOptimize(defner::strict_prf(c.preds, c.golds, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StrictPrf)->Arg(100)->Arg(1000)->Arg(10000);

void BM_ClassifyErrors(benchmark::State& state) {
  const auto c = corpus(1000);
  const defner::MatchPolicy policy;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto k = i++ % c.preds.size();
    benchmark::DoNotOptimize(defner::classify_errors(c.preds[k].set.entities, c.golds[k].entities, policy));
  }
}
BENCHMARK(BM_ClassifyErrors);

}  // namespace
