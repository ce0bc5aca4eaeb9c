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

// First-turn prompt construction over the input x output format matrix, gold
// target rendering and in-context exemplar selection.

#ifndef DEFNER_PROMPTING_HPP_
#define DEFNER_PROMPTING_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "defner/conversation.hpp"
#include "defner/corpus.hpp"
#include "defner/templates.hpp"

namespace defner {

enum class InputFormat { kText, kSchemaDef };
enum class OutputFormat { kJson, kCode, kLinearized };
enum class SelectionStrategy { kRandomFixed, kRandomShuffled, kRetrieval };

std::string_view to_string(InputFormat f);
std::string_view to_string(OutputFormat f);
std::string_view to_string(SelectionStrategy s);
InputFormat input_format_from_string(std::string_view s);
OutputFormat output_format_from_string(std::string_view s);
SelectionStrategy selection_from_string(std::string_view s);

inline constexpr std::size_t kRetrievalPoolSize = 100;
inline constexpr std::string_view kLinearSep = "<sep>";

// "Chemicals, Diseases"
std::string label_list(const DatasetSchema& schema);

// Output-format instruction with a skeleton for the schema. LINEARIZED throws
// kUnsupportedFormat: it is a target rendering, not a prompt format.
std::string format_instruction(const DatasetSchema& schema, OutputFormat out_fmt,
                               const TemplateCatalog& templates = TemplateCatalog::builtin());

// JSON: {"L1": [...], "L2": [...]} with every label present.
// CODE: fenced block with one  label_snake = [...]  line per label.
// LINEARIZED: "a <sep> b" for single-type schemas, "[a:T1, b:T2]" otherwise.
std::string render_entities(const std::vector<TypedEntity>& entities, OutputFormat out_fmt,
                            const DatasetSchema& schema);
std::string render_target(const GoldInstance& gold, OutputFormat out_fmt, const DatasetSchema& schema);

// Throws kUnsupportedFormat for LINEARIZED, kMissingDescriptions when
// SCHEMA_DEF is requested for a schema lacking label descriptions.
Conversation build_zero_shot(const Document& doc, const DatasetSchema& schema, InputFormat in_fmt,
                             OutputFormat out_fmt, const TemplateCatalog& templates = TemplateCatalog::builtin());
// Throws kInvalidArgument for an empty exemplar list.
Conversation build_few_shot(const Document& doc, const std::vector<GoldInstance>& exemplars,
                            const DatasetSchema& schema, InputFormat in_fmt, OutputFormat out_fmt,
                            const TemplateCatalog& templates = TemplateCatalog::builtin());

class Similarity {
 public:
  virtual ~Similarity() = default;
  // Symmetric, in [0, 1], maximal for identical non-empty texts.
  virtual double similarity(std::string_view a, std::string_view b) const = 0;
};

// Cosine over lowercase character-3-gram count vectors. Dot products and norms
// are integers, so the score does not depend on argument order.
class TrigramCosine final : public Similarity {
 public:
  double similarity(std::string_view a, std::string_view b) const override;
};

// Seeded order-preserving truncation of a pool to at most kRetrievalPoolSize.
std::vector<GoldInstance> retrieval_pool(const std::vector<GoldInstance>& pool, uint64_t seed);

// RANDOM_FIXED: one seeded draw shared by every instance.
// RANDOM_SHUFFLED: the same draw, reordered per (seed, instance_index).
// RETRIEVAL: top-k by similarity to query, descending; ties by instance id.
// Throws kPoolTooSmall when pool.size() < k, kInvalidArgument when RETRIEVAL
// has no query.
std::vector<GoldInstance> select_exemplars(const std::vector<GoldInstance>& pool, std::size_t k,
                                           SelectionStrategy strategy, uint64_t seed, std::size_t instance_index,
                                           const std::optional<Document>& query = std::nullopt,
                                           const Similarity* similarity = nullptr);

}  // namespace defner

#endif  // DEFNER_PROMPTING_HPP_
