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

#include <algorithm>
#include <numeric>
#include <set>

#include "defner/error.hpp"
#include "defner/text.hpp"

namespace defner {

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kDiffEntity: return "DIFF_ENTITY";
    case AblationMode::kDiffType: return "DIFF_TYPE";
    case AblationMode::kSwapDef: return "SWAP_DEF";
    case AblationMode::kDiffDomain: return "DIFF_DOMAIN";
    case AblationMode::kOnlyEnts: return "ONLY_ENTS";
  }
  return "ONLY_ENTS";
}

AblationMode ablation_from_string(std::string_view s) {
  for (auto m : {AblationMode::kDiffEntity, AblationMode::kDiffType, AblationMode::kSwapDef, AblationMode::kDiffDomain,
                 AblationMode::kOnlyEnts}) {
    if (text::iequals(s, to_string(m))) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown ablation mode '" + std::string(s) + "'");
}

std::vector<std::size_t> seeded_derangement(std::size_t n, Rng& rng) {
  if (n == 1) throw Error(ErrorCode::kInvalidArgument, "no derangement of a single element");
  std::vector<std::size_t> p(n);
  for (;;) {
    std::iota(p.begin(), p.end(), std::size_t{0});
    rng.shuffle(p);
    bool fixed = false;
    for (std::size_t i = 0; i < n && !fixed; ++i) fixed = p[i] == i;
    if (!fixed) return p;
  }
}

namespace {

constexpr int kMaxSwapAttempts = 1000;

const GoldInstance& draw_donor(const GoldInstance& instance, const Dataset& source, Rng& rng) {
  std::vector<const GoldInstance*> pool;
  for (const auto* split : {&source.train_pool, &source.test}) {
    for (const auto& g : *split) {
      if (g.id() != instance.id()) pool.push_back(&g);
    }
  }
  if (pool.empty()) throw Error(ErrorCode::kEmptyDonorPool, "no donor instance besides '" + instance.id() + "'");
  return *pool[rng.below(pool.size())];
}

DefinitionBundle donor_bundle(const GoldInstance& donor, const AblationInputs& in) {
  ExtractionSet gold;
  gold.entities = donor.entities;
  return collect_definitions(donor.document, gold, in.kb, in.allowlist, true, in.threshold);
}

// A definition from the KB that differs from `current`, uniformly over such
// concepts in snapshot order; empty when there is none.
std::string other_kb_definition(const KnowledgeBase& kb, const std::string& current, Rng& rng) {
  std::vector<const std::string*> options;
  for (const auto& c : kb.concepts()) {
    if (c.definition && !c.definition->empty() && *c.definition != current) options.push_back(&*c.definition);
  }
  if (options.empty()) return std::string();
  return *options[rng.below(options.size())];
}

DefinitionBundle swap_definitions(const DefinitionBundle& base, const KnowledgeBase& kb, Rng& rng) {
  DefinitionBundle out = base;
  std::vector<std::size_t> defined;
  for (std::size_t i = 0; i < base.items.size(); ++i) {
    if (!base.items[i].definition.empty()) defined.push_back(i);
  }
  if (defined.empty()) return out;
  if (defined.size() >= 2) {
    for (int attempt = 0; attempt < kMaxSwapAttempts; ++attempt) {
      const auto p = seeded_derangement(defined.size(), rng);
      bool ok = true;
      for (std::size_t i = 0; i < defined.size() && ok; ++i) {
        ok = base.items[defined[p[i]]].definition != base.items[defined[i]].definition;
      }
      if (!ok) continue;
      for (std::size_t i = 0; i < defined.size(); ++i) {
        out.items[defined[i]].definition = base.items[defined[p[i]]].definition;
      }
      return out;
    }
  }
  // One defined item, or every permutation keeps some text in place because
  // definitions repeat: substitute other knowledge-base definitions.
  for (std::size_t i : defined) out.items[i].definition = other_kb_definition(kb, base.items[i].definition, rng);
  return out;
}

}  // namespace

DefinitionBundle variant_bundle(const GoldInstance& instance, const DefinitionBundle& base_bundle, AblationMode mode,
                                const AblationInputs& inputs, uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64(to_string(mode))));
  switch (mode) {
    case AblationMode::kOnlyEnts: {
      DefinitionBundle out = base_bundle;
      for (auto& item : out.items) item.definition.clear();
      return out;
    }
    case AblationMode::kSwapDef:
      return swap_definitions(base_bundle, inputs.kb, rng);
    case AblationMode::kDiffEntity:
      return donor_bundle(draw_donor(instance, inputs.dataset, rng), inputs);
    case AblationMode::kDiffType: {
      const GoldInstance& donor = draw_donor(instance, inputs.dataset, rng);
      DefinitionBundle out = donor_bundle(donor, inputs);
      std::set<std::string> targets;
      for (const auto& e : donor.entities) {
        if (inputs.dataset.schema.has_label(e.entity_type)) targets.insert(text::normalize(e.surface));
      }
      std::erase_if(out.items, [&](const DefinitionItem& item) { return targets.count(text::normalize(item.term)) > 0; });
      return out;
    }
    case AblationMode::kDiffDomain:
      if (inputs.donor_dataset == nullptr) {
        throw Error(ErrorCode::kDonorRequired, "DIFF_DOMAIN needs a donor dataset");
      }
      return donor_bundle(draw_donor(instance, *inputs.donor_dataset, rng), inputs);
  }
  return base_bundle;
}

KnowledgeBase source_variant(const std::filesystem::path& kb_path, ConceptSource source) {
  KnowledgeBase kb = load_kb(kb_path, source);
  if (kb.empty()) {
    throw Error(ErrorCode::kEmptySource, "no " + std::string(to_string(source)) + " rows in " + kb_path.string());
  }
  return kb;
}

}  // namespace defner
