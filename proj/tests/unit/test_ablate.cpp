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

#include "defner/ablate.hpp"
#include "helpers.hpp"

using namespace defner;
using testing::fixtures;

namespace {

struct Setup {
  Dataset cdr = load_dataset(fixtures() / "cdr.jsonl", fixtures() / "cdr.schema.json");
  Dataset chia = load_dataset(fixtures() / "chia.jsonl", fixtures() / "chia.schema.json");
  KnowledgeBase kb = load_kb(fixtures() / "kb.tsv");
  const SemanticTypeAllowlist& allow = SemanticTypeAllowlist::default_list();

  DefinitionBundle base(const GoldInstance& g) const {
    ExtractionSet s;
    s.entities = g.entities;
    return collect_definitions(g.document, s, kb, allow, true);
  }
};

}  // namespace

TEST_CASE("derangements have no fixed points") {
  Rng rng(3);
  for (std::size_t n = 2; n < 12; ++n) {
    const auto p = seeded_derangement(n, rng);
    for (std::size_t i = 0; i < n; ++i) CHECK(p[i] != i);
  }
  CHECK(seeded_derangement(0, rng).empty());
  CHECK_THROWS_CODE(seeded_derangement(1, rng), ErrorCode::kInvalidArgument);
}

TEST_CASE("only-ents keeps terms and drops definitions") {
  Setup s;
  const auto& g = s.cdr.test.front();
  const auto b = s.base(g);
  const AblationInputs in{s.cdr, nullptr, s.kb, s.allow};
  const auto v = variant_bundle(g, b, AblationMode::kOnlyEnts, in, 1);
  REQUIRE(v.items.size() == b.items.size());
  for (std::size_t i = 0; i < v.items.size(); ++i) {
    CHECK(v.items[i].term == b.items[i].term);
    CHECK(v.items[i].definition.empty());
  }
}

TEST_CASE("swap-def moves every definition") {
  Setup s;
  const AblationInputs in{s.cdr, nullptr, s.kb, s.allow};
  for (const auto& g : s.cdr.test) {
    const auto b = s.base(g);
    const auto v = variant_bundle(g, b, AblationMode::kSwapDef, in, 7);
    for (std::size_t i = 0; i < b.items.size(); ++i) {
      if (!b.items[i].definition.empty()) CHECK(v.items[i].definition != b.items[i].definition);
    }
  }
}

TEST_CASE("donor modes are seeded and exclude the instance") {
  Setup s;
  const auto& g = s.cdr.test.front();
  const auto b = s.base(g);
  const AblationInputs in{s.cdr, &s.chia, s.kb, s.allow};
  const auto e1 = variant_bundle(g, b, AblationMode::kDiffEntity, in, 11);
  const auto e2 = variant_bundle(g, b, AblationMode::kDiffEntity, in, 11);
  CHECK(e1 == e2);
  for (const auto& item : e1.items) CHECK(item.source_instance != g.id());
  const auto dom = variant_bundle(g, b, AblationMode::kDiffDomain, in, 11);
  for (const auto& item : dom.items) CHECK(item.source_instance.rfind("chia-", 0) == 0);
  const auto ty = variant_bundle(g, b, AblationMode::kDiffType, in, 11);
  CHECK(ty.items.size() <= e1.items.size());
  const AblationInputs no_donor{s.cdr, nullptr, s.kb, s.allow};
  CHECK_THROWS_CODE(variant_bundle(g, b, AblationMode::kDiffDomain, no_donor, 1), ErrorCode::kDonorRequired);
  Dataset lone;
  lone.schema = s.cdr.schema;
  lone.test = {g};
  const AblationInputs tiny{lone, nullptr, s.kb, s.allow};
  CHECK_THROWS_CODE(variant_bundle(g, b, AblationMode::kDiffEntity, tiny, 1), ErrorCode::kEmptyDonorPool);
}

TEST_CASE("source variants") {
  const auto wiki = source_variant(fixtures() / "kb.tsv", ConceptSource::kWikidata);
  CHECK(!wiki.empty());
  CHECK_THROWS_CODE(source_variant(fixtures() / "kb.tsv", ConceptSource::kGenerated), ErrorCode::kEmptySource);
  CHECK(ablation_from_string("swap_def") == AblationMode::kSwapDef);
}
