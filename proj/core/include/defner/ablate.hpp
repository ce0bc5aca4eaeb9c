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

// Relevance and source ablations of definition bundles.

#ifndef DEFNER_ABLATE_HPP_
#define DEFNER_ABLATE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "defner/augment.hpp"
#include "defner/corpus.hpp"
#include "defner/kb.hpp"
#include "defner/rng.hpp"

namespace defner {

enum class AblationMode { kDiffEntity, kDiffType, kSwapDef, kDiffDomain, kOnlyEnts };

std::string_view to_string(AblationMode mode);
AblationMode ablation_from_string(std::string_view s);

// A permutation p of [0, n) with p[i] != i for all i, by rejection sampling
// over uniform shuffles. n must be 0 or at least 2.
std::vector<std::size_t> seeded_derangement(std::size_t n, Rng& rng);

struct AblationInputs {
  const Dataset& dataset;
  const Dataset* donor_dataset = nullptr;  // DIFF_DOMAIN only
  const KnowledgeBase& kb;
  const SemanticTypeAllowlist& allowlist;
  double threshold = kDefaultLinkThreshold;
};

// Pure in (instance, base_bundle, mode, inputs, seed).
//   DIFF_ENTITY  bundle of a uniformly drawn other instance of the dataset
//                (its gold entities plus linked concepts)
//   DIFF_TYPE    as DIFF_ENTITY without terms matching the donor's gold
//   SWAP_DEF     definitions permuted so no term keeps its own text
//   DIFF_DOMAIN  as DIFF_ENTITY with the donor from donor_dataset
//   ONLY_ENTS    terms kept, definitions emptied
// Throws kDonorRequired and kEmptyDonorPool.
DefinitionBundle variant_bundle(const GoldInstance& instance, const DefinitionBundle& base_bundle, AblationMode mode,
                                const AblationInputs& inputs, uint64_t seed);

// load_kb restricted to one source; throws kEmptySource when nothing is left.
KnowledgeBase source_variant(const std::filesystem::path& kb_path, ConceptSource source);

}  // namespace defner

#endif  // DEFNER_ABLATE_HPP_
