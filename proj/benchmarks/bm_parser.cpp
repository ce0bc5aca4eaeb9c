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

#include "defner/corpus.hpp"
#include "defner/parsing.hpp"
#include "defner/prompting.hpp"

namespace {

defner::DatasetSchema schema() {
  defner::DatasetSchema s;
  s.name = "bench";
  s.labels = {{"Chemicals", std::nullopt}, {"Diseases", std::nullopt}};
  return s;
}

defner::GoldInstance sample() {
  return {{"b", "t"},
          {{"bupivacaine", "Chemicals"}, {"propofol", "Chemicals"}, {"cardiovascular depression", "Diseases"},
           {"hypotension", "Diseases"}, {"Parkinson's disease", "Diseases"}}};
}

void BM_ParseClean(benchmark::State& state) {
  const auto s = schema();
  const auto fmt = static_cast<defner::OutputFormat>(state.range(0));
  const std::string text = defner::render_target(sample(), fmt, s);
  for (auto _ : state) benchmark::DoNotOptimize(defner::parse_output(text, s, fmt));
}
BENCHMARK(BM_ParseClean)
    ->Arg(static_cast<int>(defner::OutputFormat::kJson))
    ->Arg(static_cast<int>(defner::OutputFormat::kCode))
    ->Arg(static_cast<int>(defner::OutputFormat::kLinearized));

void BM_ParseRepaired(benchmark::State& state) {
  const auto s = schema();
  const std::string text = "Sure, here you go:\n```json\n{'Chemicals': ['bupivacaine', 'propofol',], "
                           "'Diseases': ['cardiovascular depression', 'hypotension',],}\n```\nAnything else?";
  for (auto _ : state) benchmark::DoNotOptimize(defner::parse_json_output(text, s));
}
BENCHMARK(BM_ParseRepaired);

}  // namespace
