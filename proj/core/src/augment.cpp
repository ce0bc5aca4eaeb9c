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

#include <algorithm>
#include <set>

#include "defner/error.hpp"
#include "defner/parsing.hpp"
#include "defner/text.hpp"

namespace defner {

using nlohmann::json;

std::string_view to_string(AugmentationMode mode) {
  switch (mode) {
    case AugmentationMode::kNone: return "NONE";
    case AugmentationMode::kZsDef: return "ZS_DEF";
    case AugmentationMode::kIp: return "IP";
    case AugmentationMode::kIpDef: return "IP_DEF";
    case AugmentationMode::kFsDef: return "FS_DEF";
  }
  return "NONE";
}

AugmentationMode augmentation_from_string(std::string_view s) {
  for (auto m : {AugmentationMode::kNone, AugmentationMode::kZsDef, AugmentationMode::kIp, AugmentationMode::kIpDef,
                 AugmentationMode::kFsDef}) {
    if (text::iequals(s, to_string(m))) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown augmentation mode '" + std::string(s) + "'");
}

std::string_view to_string(DefinitionOrigin origin) {
  return origin == DefinitionOrigin::kExtracted ? "EXTRACTED" : "LINKED_CANDIDATE";
}

DefinitionOrigin definition_origin_from_string(std::string_view s) {
  if (s == "EXTRACTED") return DefinitionOrigin::kExtracted;
  if (s == "LINKED_CANDIDATE") return DefinitionOrigin::kLinkedCandidate;
  throw Error(ErrorCode::kInvalidArgument, "unknown definition origin '" + std::string(s) + "'");
}

std::size_t DefinitionBundle::with_definitions() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const DefinitionItem& i) { return !i.definition.empty(); }));
}

DefinitionBundle collect_definitions(const Document& doc, const ExtractionSet& first_pass, const KnowledgeBase& kb,
                                     const SemanticTypeAllowlist& allowlist, bool include_candidates,
                                     double threshold) {
  DefinitionBundle bundle;
  std::set<std::string> seen;
  for (const auto& e : first_pass.entities) {
    std::string key = text::normalize(e.surface);
    if (key.empty() || !seen.insert(std::move(key)).second) continue;
    DefinitionItem item{e.surface, "", DefinitionOrigin::kExtracted, std::nullopt, doc.id};
    if (auto hit = lookup_definition(e.surface, kb)) {
      item.cui = hit->cui;
      item.definition = hit->definition;
    }
    bundle.items.push_back(std::move(item));
  }
  if (include_candidates) {
    for (const auto& m : link_mentions(doc.text, kb, allowlist, threshold)) {
      std::string key = text::normalize(m.span_text);
      if (key.empty() || !seen.insert(std::move(key)).second) continue;
      const Concept* c = kb.find(m.cui);
      bundle.items.push_back({m.span_text, c != nullptr ? c->definition.value_or("") : "",
                              DefinitionOrigin::kLinkedCandidate, m.cui, doc.id});
    }
  }
  return bundle;
}

std::string render_definitions(const DefinitionBundle& bundle, const TemplateCatalog& templates) {
  std::string out;
  for (const auto& item : bundle.items) {
    if (!out.empty()) out += '\n';
    out += item.definition.empty()
               ? templates.render("definition_line_bare", {{"term", item.term}})
               : templates.render("definition_line", {{"term", item.term}, {"definition", item.definition}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const ExtractionSet& set) {
  json entities = json::array();
  for (const auto& e : set.entities) entities.push_back({{"surface", e.surface}, {"type", e.entity_type}});
  return {{"entities", std::move(entities)}, {"parse_status", std::string(to_string(set.status))}, {"log", set.log}};
}

ExtractionSet extraction_set_from_json(const json& j) {
  ExtractionSet out;
  for (const auto& e : j.at("entities")) {
    out.entities.push_back({e.at("surface").get<std::string>(), e.at("type").get<std::string>()});
  }
  out.status = parse_status_from_string(j.value("parse_status", std::string("CLEAN")));
  if (j.contains("log")) out.log = j.at("log").get<std::vector<std::string>>();
  return out;
}

json to_json(const DefinitionBundle& bundle) {
  json items = json::array();
  for (const auto& i : bundle.items) {
    items.push_back({{"term", i.term},
                     {"definition", i.definition},
                     {"origin", std::string(to_string(i.origin))},
                     {"cui", i.cui ? json(*i.cui) : json(nullptr)},
                     {"source_instance", i.source_instance}});
  }
  return items;
}

DefinitionBundle definition_bundle_from_json(const json& j) {
  DefinitionBundle out;
  for (const auto& i : j) {
    DefinitionItem item;
    item.term = i.at("term").get<std::string>();
    item.definition = i.at("definition").get<std::string>();
    item.origin = definition_origin_from_string(i.at("origin").get<std::string>());
    if (i.contains("cui") && i["cui"].is_string()) item.cui = i["cui"].get<std::string>();
    item.source_instance = i.value("source_instance", std::string());
    out.items.push_back(std::move(item));
  }
  return out;
}

namespace {

json usage_json(const UsageTotals& u) {
  return {{"requests", u.requests},
          {"prompt_tokens", u.prompt_tokens},
          {"completion_tokens", u.completion_tokens},
          {"cached_requests", u.cached_requests},
          {"cached_prompt_tokens", u.cached_prompt_tokens},
          {"cached_completion_tokens", u.cached_completion_tokens},
          {"failures", u.failures}};
}

UsageTotals usage_from_json(const json& j) {
  UsageTotals u;
  u.requests = j.value("requests", int64_t{0});
  u.prompt_tokens = j.value("prompt_tokens", int64_t{0});
  u.completion_tokens = j.value("completion_tokens", int64_t{0});
  u.cached_requests = j.value("cached_requests", int64_t{0});
  u.cached_prompt_tokens = j.value("cached_prompt_tokens", int64_t{0});
  u.cached_completion_tokens = j.value("cached_completion_tokens", int64_t{0});
  u.failures = j.value("failures", int64_t{0});
  return u;
}

}  // namespace

json to_json(const RunTrace& trace) {
  json messages = json::array();
  for (const auto& m : trace.conversation.messages()) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  json turns = json::array();
  for (const auto& t : trace.turns) {
    json turn{{"kind", t.kind},
              {"term", t.term ? json(*t.term) : json(nullptr)},
              {"request_key", t.request_key},
              {"response", t.response},
              {"parsed", to_json(t.parsed)},
              {"gateway_error", t.gateway_error ? json(*t.gateway_error) : json(nullptr)}};
    turns.push_back(std::move(turn));
  }
  return {{"id", trace.instance_id},
          {"text", trace.document.text},
          {"conversation", std::move(messages)},
          {"turns", std::move(turns)},
          {"first_pass", to_json(trace.first_pass)},
          {"final", to_json(trace.final_set)},
          {"bundle", to_json(trace.bundle)},
          {"usage", usage_json(trace.usage)},
          {"requests", trace.requests},
          {"flags",
           {{"first_pass_gateway_failure", trace.first_pass_gateway_failure},
            {"followup_gateway_failures", trace.followup_gateway_failures},
            {"followup_parse_failures", trace.followup_parse_failures},
            {"replay_miss", trace.replay_miss}}}};
}

RunTrace run_trace_from_json(const json& j) {
  RunTrace t;
  t.instance_id = j.at("id").get<std::string>();
  t.document = {t.instance_id, j.value("text", std::string())};
  std::vector<Message> messages;
  for (const auto& m : j.at("conversation")) {
    messages.push_back({role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
  }
  t.conversation = Conversation::from_messages(std::move(messages));
  for (const auto& turn : j.at("turns")) {
    TurnRecord r;
    r.kind = turn.at("kind").get<std::string>();
    if (turn["term"].is_string()) r.term = turn["term"].get<std::string>();
    r.request_key = turn.value("request_key", std::string());
    r.response = turn.value("response", std::string());
    r.parsed = extraction_set_from_json(turn.at("parsed"));
    if (turn["gateway_error"].is_string()) r.gateway_error = turn["gateway_error"].get<std::string>();
    t.turns.push_back(std::move(r));
  }
  t.first_pass = extraction_set_from_json(j.at("first_pass"));
  t.final_set = extraction_set_from_json(j.at("final"));
  t.bundle = definition_bundle_from_json(j.at("bundle"));
  t.usage = usage_from_json(j.at("usage"));
  t.requests = j.at("requests").get<std::size_t>();
  const json& flags = j.at("flags");
  t.first_pass_gateway_failure = flags.value("first_pass_gateway_failure", false);
  t.followup_gateway_failures = flags.value("followup_gateway_failures", std::size_t{0});
  t.followup_parse_failures = flags.value("followup_parse_failures", std::size_t{0});
  t.replay_miss = flags.value("replay_miss", false);
  return t;
}

// ---------------------------------------------------------------------------
// Turns

namespace {

ChatRequest request_for(const Conversation& conv, const PromptContext& ctx) {
  ChatRequest req;
  req.model_id = ctx.model_id;
  req.messages = conv;
  req.max_tokens = kExtractionMaxTokens;
  return req;
}

// Sends the conversation, whose last message is the user turn just added.
// On success the reply is appended; on failure the user turn is removed
// again so the conversation stays well formed.
std::optional<ChatResponse> send(RunTrace& trace, TurnRecord& record, const PromptContext& ctx, Gateway& gateway) {
  const ChatRequest req = request_for(trace.conversation, ctx);
  record.request_key = canonical_request_key(req);
  ++trace.requests;
  try {
    ChatResponse resp = gateway.complete(req);
    trace.usage.add(resp);
    trace.conversation.add_assistant(resp.text);
    record.response = resp.text;
    return resp;
  } catch (const Error& e) {
    ++trace.usage.failures;
    trace.conversation.pop_back();
    record.gateway_error = e.what();
    record.gateway_error_code = e.code();
    if (e.code() == ErrorCode::kReplayMiss) trace.replay_miss = true;
    return std::nullopt;
  }
}

void followup(RunTrace& trace, std::string prompt, std::optional<std::string> term, const PromptContext& ctx,
              Gateway& gateway) {
  TurnRecord record;
  record.kind = "followup";
  record.term = std::move(term);
  record.prompt = prompt;
  trace.conversation.add_user(std::move(prompt));
  if (!send(trace, record, ctx, gateway)) {
    ++trace.followup_gateway_failures;
    record.parsed = ExtractionSet::failed("gateway: " + record.gateway_error.value_or(""));
  } else {
    record.parsed = parse_followup(record.response, ctx.schema, ctx.out_fmt);
    if (record.parsed.status == ParseStatus::kFailed) ++trace.followup_parse_failures;
    trace.final_set = resolve_followup(trace.final_set, record.parsed);
  }
  trace.turns.push_back(std::move(record));
}

TemplateSlots common_slots(const RunTrace& trace, const PromptContext& ctx) {
  return {{"labels", label_list(ctx.schema)},
          {"document", trace.document.text},
          {"format_instruction", format_instruction(ctx.schema, ctx.out_fmt, ctx.templates)}};
}

bool can_follow_up(const RunTrace& trace) { return !trace.first_pass_gateway_failure && !trace.turns.empty(); }

}  // namespace

RunTrace run_first_pass(const Document& doc, const std::vector<GoldInstance>& exemplars, const PromptContext& ctx,
                        Gateway& gateway) {
  RunTrace trace;
  trace.instance_id = doc.id;
  trace.document = doc;
  trace.conversation = exemplars.empty()
                           ? build_zero_shot(doc, ctx.schema, ctx.in_fmt, ctx.out_fmt, ctx.templates)
                           : build_few_shot(doc, exemplars, ctx.schema, ctx.in_fmt, ctx.out_fmt, ctx.templates);
  TurnRecord record;
  record.kind = "first_pass";
  record.prompt = trace.conversation.back().content;
  if (!send(trace, record, ctx, gateway)) {
    trace.first_pass_gateway_failure = true;
    // Keep the prompt in the trace for auditing.
    trace.conversation.add_user(record.prompt);
    record.parsed = ExtractionSet::failed("gateway: " + record.gateway_error.value_or(""));
  } else {
    record.parsed = parse_output(record.response, ctx.schema, ctx.out_fmt);
  }
  trace.first_pass = record.parsed;
  trace.final_set = record.parsed;
  trace.turns.push_back(std::move(record));
  return trace;
}

void run_single_turn_def(RunTrace& trace, const DefinitionBundle& bundle, const PromptContext& ctx, Gateway& gateway) {
  trace.bundle = bundle;
  if (!can_follow_up(trace)) return;
  TemplateSlots slots = common_slots(trace, ctx);
  slots["definitions"] = render_definitions(bundle, ctx.templates);
  followup(trace, ctx.templates.render("followup_single", slots), std::nullopt, ctx, gateway);
}

void run_iterative(RunTrace& trace, const DefinitionBundle& bundle, const PromptContext& ctx, Gateway& gateway,
                   bool with_defs) {
  trace.bundle = bundle;
  if (!can_follow_up(trace)) return;
  for (const auto& item : bundle.items) {
    if (with_defs && item.definition.empty()) continue;
    TemplateSlots slots = common_slots(trace, ctx);
    slots["term"] = item.term;
    std::string prompt;
    if (with_defs) {
      slots["definitions"] = item.definition;
      prompt = ctx.templates.render("followup_iterative_def", slots);
    } else {
      prompt = ctx.templates.render("followup_iterative_nodef", slots);
    }
    followup(trace, std::move(prompt), item.term, ctx, gateway);
  }
}

void run_few_shot_def(RunTrace& trace, const DefinitionBundle& bundle,
                      const std::vector<std::pair<GoldInstance, DefinitionBundle>>& exemplar_bundles,
                      const PromptContext& ctx, Gateway& gateway) {
  trace.bundle = bundle;
  if (!can_follow_up(trace)) return;
  std::string blocks;
  for (const auto& [gold, ex_bundle] : exemplar_bundles) {
    std::string block = ctx.templates.render("followup_exemplar_block",
                                             {{"document", gold.document.text},
                                              {"definitions", render_definitions(ex_bundle, ctx.templates)},
                                              {"target", render_target(gold, ctx.out_fmt, ctx.schema)}});
    while (!block.empty() && block.back() == '\n') block.pop_back();
    if (!blocks.empty()) blocks += "\n\n";
    blocks += block;
  }
  TemplateSlots slots = common_slots(trace, ctx);
  slots["exemplars"] = blocks.empty() ? std::string() : blocks + "\n";
  slots["definitions"] = render_definitions(bundle, ctx.templates);
  followup(trace, ctx.templates.render("followup_fewshot", slots), std::nullopt, ctx, gateway);
}

}  // namespace defner
