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

#include "defner/augment.hpp"
#include "defner/parsing.hpp"
#include "helpers.hpp"

using namespace defner;
using testing::fixtures;

namespace {

const std::string kDoc =
    "Pre-treatment of bupivacaine-induced cardiovascular depression using different lipid formulations of propofol.";

struct Setup {
  DatasetSchema schema = testing::two_type_schema();
  KnowledgeBase kb = load_kb(fixtures() / "kb.tsv");
  Document doc{"cdr-table6", kDoc};
};

}  // namespace

TEST_CASE("bundle collects extracted terms then linked candidates") {
  Setup s;
  ExtractionSet fp;
  fp.entities = {{"bupivacaine", "Chemicals"}, {"Bupivacaine", "Diseases"}, {"made up term", "Diseases"}};
  const auto b = collect_definitions(s.doc, fp, s.kb, SemanticTypeAllowlist::default_list(), true);
  REQUIRE(b.items.size() >= 3);
  CHECK(b.items[0].term == "bupivacaine");
  CHECK(b.items[0].origin == DefinitionOrigin::kExtracted);
  CHECK(b.items[1].term == "made up term");
  CHECK(b.items[1].definition.empty());
  bool saw_propofol = false;
  for (const auto& item : b.items) {
    if (item.term == "propofol") {
      saw_propofol = true;
      CHECK(item.origin == DefinitionOrigin::kLinkedCandidate);
      CHECK(item.cui.has_value());
    }
    CHECK(item.source_instance == "cdr-table6");
  }
  CHECK(saw_propofol);
  const auto only_extracted = collect_definitions(s.doc, fp, s.kb, SemanticTypeAllowlist::default_list(), false);
  CHECK(only_extracted.items.size() == 2);
}

TEST_CASE("single-turn follow-up replaces the first pass") {
  Setup s;
  Gateway gw(std::make_unique<ScriptedBackend>(std::vector<std::string>{
      R"({"Chemicals": ["bupivacaine"], "Diseases": []})",
      R"({"Chemicals": ["bupivacaine", "propofol"], "Diseases": ["cardiovascular depression"]})"}));
  PromptContext ctx{s.schema, InputFormat::kText, OutputFormat::kJson, TemplateCatalog::builtin(), "m"};
  auto trace = run_first_pass(s.doc, {}, ctx, gw);
  CHECK(trace.first_pass.entities.size() == 1);
  const auto bundle = collect_definitions(s.doc, trace.first_pass, s.kb, SemanticTypeAllowlist::default_list(), true);
  run_single_turn_def(trace, bundle, ctx, gw);
  CHECK(trace.requests == 2);
  CHECK(trace.final_set.entities.size() == 3);
  CHECK(trace.conversation.size() == 4);
  REQUIRE(trace.turns.size() == 2);
  CHECK(trace.turns[1].prompt.find("Concept definitions:\n- bupivacaine: ") != std::string::npos);
}

TEST_CASE("iterative follow-ups skip undefined terms and carry failures forward") {
  Setup s;
  DefinitionBundle bundle;
  bundle.items = {{"a", "def a", DefinitionOrigin::kExtracted, std::nullopt, "d"},
                  {"b", "", DefinitionOrigin::kExtracted, std::nullopt, "d"},
                  {"c", "def c", DefinitionOrigin::kLinkedCandidate, std::string("C1"), "d"}};
  Gateway gw(std::make_unique<ScriptedBackend>(std::vector<std::string>{
      R"({"Chemicals": ["a"], "Diseases": []})", "unparseable", R"({"Chemicals": ["a"], "Diseases": ["c"]})"}));
  PromptContext ctx{s.schema, InputFormat::kText, OutputFormat::kJson, TemplateCatalog::builtin(), "m"};
  auto trace = run_first_pass(s.doc, {}, ctx, gw);
  run_iterative(trace, bundle, ctx, gw, true);
  CHECK(trace.requests == 3);
  CHECK(trace.followup_parse_failures == 1);
  CHECK(trace.final_set.entities.size() == 2);
  CHECK(trace.turns[1].term == std::optional<std::string>("a"));
  CHECK(trace.turns[2].term == std::optional<std::string>("c"));

  Gateway gw2(std::make_unique<ScriptedBackend>(std::vector<std::string>{"{}", "{}", "{}", "{}"}));
  auto t2 = run_first_pass(s.doc, {}, ctx, gw2);
  run_iterative(t2, bundle, ctx, gw2, false);
  CHECK(t2.requests == 4);
}

TEST_CASE("gateway failure on the first pass skips follow-ups") {
  Setup s;
  Gateway gw(std::make_unique<ScriptedBackend>(
      std::vector<ScriptedBackend::Step>{{"", ErrorCode::kTransportFailure}, {"{}", std::nullopt}}));
  PromptContext ctx{s.schema, InputFormat::kText, OutputFormat::kJson, TemplateCatalog::builtin(), "m"};
  auto trace = run_first_pass(s.doc, {}, ctx, gw);
  CHECK(trace.first_pass_gateway_failure);
  CHECK(trace.first_pass.status == ParseStatus::kFailed);
  DefinitionBundle bundle;
  bundle.items = {{"a", "def", DefinitionOrigin::kExtracted, std::nullopt, "d"}};
  run_single_turn_def(trace, bundle, ctx, gw);
  CHECK(trace.requests == 1);
  CHECK(trace.gateway_failure());
}

TEST_CASE("few-shot follow-up shows exemplar definitions and gold") {
  Setup s;
  const auto ex = testing::gold("e", "Cocaine causes seizures.", {{"Cocaine", "Chemicals"}});
  DefinitionBundle exb;
  exb.items = {{"Cocaine", "A stimulant.", DefinitionOrigin::kExtracted, std::nullopt, "e"}};
  DefinitionBundle qb;
  qb.items = {{"propofol", "An anesthetic.", DefinitionOrigin::kLinkedCandidate, std::nullopt, "q"}};
  Gateway gw(std::make_unique<ScriptedBackend>(std::vector<std::string>{"{}", R"({"Chemicals": ["propofol"]})"}));
  PromptContext ctx{s.schema, InputFormat::kText, OutputFormat::kJson, TemplateCatalog::builtin(), "m"};
  auto trace = run_first_pass(s.doc, {ex}, ctx, gw);
  run_few_shot_def(trace, qb, {{ex, exb}}, ctx, gw);
  const auto& p = trace.turns.back().prompt;
  CHECK(p.find("Concept definitions:\n- Cocaine: A stimulant.\nCorrected answer: {\"Chemicals\": [\"Cocaine\"]") !=
        std::string::npos);
  CHECK(p.find("- propofol: An anesthetic.") != std::string::npos);
  CHECK(trace.final_set.entities == std::vector<TypedEntity>{{"propofol", "Chemicals"}});
}

TEST_CASE("trace json round-trip") {
  Setup s;
  Gateway gw(std::make_unique<ScriptedBackend>(std::vector<std::string>{R"({"Chemicals": ["x"], "Diseases": []})"}));
  PromptContext ctx{s.schema, InputFormat::kText, OutputFormat::kJson, TemplateCatalog::builtin(), "m"};
  auto trace = run_first_pass(s.doc, {}, ctx, gw);
  trace.bundle.items = {{"x", "d", DefinitionOrigin::kLinkedCandidate, std::string("C9"), "cdr-table6"}};
  const auto back = run_trace_from_json(to_json(trace));
  CHECK(back.instance_id == trace.instance_id);
  CHECK(back.conversation == trace.conversation);
  CHECK(back.bundle == trace.bundle);
  CHECK(back.final_set.entities == trace.final_set.entities);
  CHECK(back.requests == trace.requests);
  CHECK(augmentation_from_string("ip_def") == AugmentationMode::kIpDef);
}
