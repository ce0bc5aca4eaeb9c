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

// First-pass extraction and definition-augmented follow-up prompting.

#ifndef DEFNER_AUGMENT_HPP_
#define DEFNER_AUGMENT_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "defner/conversation.hpp"
#include "defner/corpus.hpp"
#include "defner/extraction.hpp"
#include "defner/kb.hpp"
#include "defner/llm_gateway.hpp"
#include "defner/prompting.hpp"
#include "defner/templates.hpp"

namespace defner {

enum class AugmentationMode { kNone, kZsDef, kIp, kIpDef, kFsDef };

std::string_view to_string(AugmentationMode mode);
AugmentationMode augmentation_from_string(std::string_view s);

enum class DefinitionOrigin { kExtracted, kLinkedCandidate };

std::string_view to_string(DefinitionOrigin origin);
DefinitionOrigin definition_origin_from_string(std::string_view s);

struct DefinitionItem {
  std::string term;
  std::string definition;  // empty when the knowledge base has none
  DefinitionOrigin origin = DefinitionOrigin::kExtracted;
  std::optional<std::string> cui;
  std::string source_instance;  // id of the instance the term came from

  bool operator==(const DefinitionItem&) const = default;
};

struct DefinitionBundle {
  std::vector<DefinitionItem> items;

  std::size_t with_definitions() const;
  bool operator==(const DefinitionBundle&) const = default;
};

// One item per first-pass entity (first-pass order), then, when
// include_candidates is set, one per linked mention not already covered (span
// order). Terms are unique after normalization; extracted items win.
DefinitionBundle collect_definitions(const Document& doc, const ExtractionSet& first_pass, const KnowledgeBase& kb,
                                     const SemanticTypeAllowlist& allowlist, bool include_candidates,
                                     double threshold = kDefaultLinkThreshold);

// Everything a turn needs besides the conversation itself.
struct PromptContext {
  const DatasetSchema& schema;
  InputFormat in_fmt = InputFormat::kText;
  OutputFormat out_fmt = OutputFormat::kJson;
  const TemplateCatalog& templates = TemplateCatalog::builtin();
  std::string model_id;
};

struct TurnRecord {
  std::string kind;                 // "first_pass" or "followup"
  std::optional<std::string> term;  // iterative turns only
  std::string prompt;
  std::string response;
  std::string request_key;
  ExtractionSet parsed;
  std::optional<std::string> gateway_error;
  std::optional<ErrorCode> gateway_error_code;
};

struct RunTrace {
  std::string instance_id;
  Document document;
  Conversation conversation;
  std::vector<TurnRecord> turns;
  ExtractionSet first_pass;
  ExtractionSet final_set;
  DefinitionBundle bundle;
  UsageTotals usage;
  std::size_t requests = 0;
  // Set when the first-pass request failed; the instance is then scored as
  // an empty prediction and never augmented.
  bool first_pass_gateway_failure = false;
  std::size_t followup_gateway_failures = 0;
  std::size_t followup_parse_failures = 0;
  bool replay_miss = false;

  bool gateway_failure() const { return first_pass_gateway_failure || followup_gateway_failures > 0; }
};

nlohmann::json to_json(const ExtractionSet& set);
ExtractionSet extraction_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DefinitionBundle& bundle);
DefinitionBundle definition_bundle_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunTrace& trace);
RunTrace run_trace_from_json(const nlohmann::json& j);

// Zero-shot when exemplars is empty, otherwise few-shot. One gateway call.
RunTrace run_first_pass(const Document& doc, const std::vector<GoldInstance>& exemplars, const PromptContext& ctx,
                        Gateway& gateway);

// One follow-up restating the instructions with every bundle item.
void run_single_turn_def(RunTrace& trace, const DefinitionBundle& bundle, const PromptContext& ctx, Gateway& gateway);

// One follow-up per bundle item in bundle order. With definitions, items
// lacking one are skipped.
void run_iterative(RunTrace& trace, const DefinitionBundle& bundle, const PromptContext& ctx, Gateway& gateway,
                   bool with_defs);

// One follow-up showing every exemplar with its definitions and gold as the
// corrected answer, then the query bundle.
void run_few_shot_def(RunTrace& trace, const DefinitionBundle& bundle,
                      const std::vector<std::pair<GoldInstance, DefinitionBundle>>& exemplar_bundles,
                      const PromptContext& ctx, Gateway& gateway);

// Lines for the {{definitions}} slot.
std::string render_definitions(const DefinitionBundle& bundle, const TemplateCatalog& templates);

}  // namespace defner

#endif  // DEFNER_AUGMENT_HPP_
