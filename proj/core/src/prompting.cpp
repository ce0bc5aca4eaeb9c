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

#include "defner/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "defner/error.hpp"
#include "defner/rng.hpp"
#include "defner/text.hpp"

namespace defner {

std::string_view to_string(InputFormat f) { return f == InputFormat::kText ? "TEXT" : "SCHEMA_DEF"; }

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::kJson: return "JSON";
    case OutputFormat::kCode: return "CODE";
    case OutputFormat::kLinearized: return "LINEARIZED";
  }
  return "JSON";
}

std::string_view to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::kRandomFixed: return "RANDOM_FIXED";
    case SelectionStrategy::kRandomShuffled: return "RANDOM_SHUFFLED";
    case SelectionStrategy::kRetrieval: return "RETRIEVAL";
  }
  return "RANDOM_FIXED";
}

namespace {

template <typename E, std::size_t N>
E enum_from_string(std::string_view s, const E (&values)[N], std::string_view what) {
  for (E v : values) {
    if (text::iequals(s, to_string(v))) return v;
  }
  throw Error(ErrorCode::kConfig, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

std::string json_quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

}  // namespace

InputFormat input_format_from_string(std::string_view s) {
  static constexpr InputFormat kAll[] = {InputFormat::kText, InputFormat::kSchemaDef};
  return enum_from_string(s, kAll, "input format");
}

OutputFormat output_format_from_string(std::string_view s) {
  static constexpr OutputFormat kAll[] = {OutputFormat::kJson, OutputFormat::kCode, OutputFormat::kLinearized};
  return enum_from_string(s, kAll, "output format");
}

SelectionStrategy selection_from_string(std::string_view s) {
  static constexpr SelectionStrategy kAll[] = {SelectionStrategy::kRandomFixed, SelectionStrategy::kRandomShuffled,
                                               SelectionStrategy::kRetrieval};
  return enum_from_string(s, kAll, "selection strategy");
}

std::string label_list(const DatasetSchema& schema) {
  std::string out;
  for (const auto& spec : schema.labels) {
    if (!out.empty()) out += ", ";
    out += spec.label;
  }
  return out;
}

std::string format_instruction(const DatasetSchema& schema, OutputFormat out_fmt, const TemplateCatalog& templates) {
  std::string skeleton;
  switch (out_fmt) {
    case OutputFormat::kJson:
      skeleton = "{";
      for (std::size_t i = 0; i < schema.labels.size(); ++i) {
        if (i) skeleton += ", ";
        skeleton += json_quote(schema.labels[i].label) + ": [\"...\"]";
      }
      skeleton += "}";
      return templates.render("format_json", {{"skeleton", skeleton}});
    case OutputFormat::kCode:
      skeleton = "```python\n";
      for (const auto& spec : schema.labels) skeleton += text::snake_case(spec.label) + " = [\"...\"]\n";
      skeleton += "```";
      return templates.render("format_code", {{"skeleton", skeleton}});
    case OutputFormat::kLinearized:
      break;
  }
  throw Error(ErrorCode::kUnsupportedFormat, "LINEARIZED output is not a prompt format");
}

std::string render_entities(const std::vector<TypedEntity>& entities, OutputFormat out_fmt,
                            const DatasetSchema& schema) {
  std::map<std::string, std::vector<std::string>> by_label;
  for (const auto& e : entities) by_label[e.entity_type].push_back(e.surface);
  auto list_literal = [&](const std::string& label) {
    std::string out = "[";
    const auto it = by_label.find(label);
    if (it != by_label.end()) {
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        if (i) out += ", ";
        out += json_quote(it->second[i]);
      }
    }
    return out + "]";
  };

  std::string out;
  switch (out_fmt) {
    case OutputFormat::kJson:
      out = "{";
      for (std::size_t i = 0; i < schema.labels.size(); ++i) {
        if (i) out += ", ";
        out += json_quote(schema.labels[i].label) + ": " + list_literal(schema.labels[i].label);
      }
      return out + "}";
    case OutputFormat::kCode:
      out = "```python\n";
      for (const auto& spec : schema.labels) out += text::snake_case(spec.label) + " = " + list_literal(spec.label) + "\n";
      return out + "```";
    case OutputFormat::kLinearized:
      if (schema.single_type()) {
        for (std::size_t i = 0; i < entities.size(); ++i) {
          if (i) out += " " + std::string(kLinearSep) + " ";
          out += entities[i].surface;
        }
        return out;
      }
      out = "[";
      for (std::size_t i = 0; i < entities.size(); ++i) {
        if (i) out += ", ";
        out += entities[i].surface + ":" + entities[i].entity_type;
      }
      return out + "]";
  }
  return out;
}

std::string render_target(const GoldInstance& gold, OutputFormat out_fmt, const DatasetSchema& schema) {
  return render_entities(gold.entities, out_fmt, schema);
}

namespace {

std::string prompt_template_name(InputFormat in_fmt, OutputFormat out_fmt) {
  std::string name = in_fmt == InputFormat::kText ? "prompt_text_" : "prompt_schema_def_";
  return name + (out_fmt == OutputFormat::kJson ? "json" : "code");
}

Conversation build_prompt(const Document& doc, const std::vector<GoldInstance>* exemplars,
                          const DatasetSchema& schema, InputFormat in_fmt, OutputFormat out_fmt,
                          const TemplateCatalog& templates) {
  if (out_fmt == OutputFormat::kLinearized) {
    throw Error(ErrorCode::kUnsupportedFormat, "LINEARIZED output is not a prompt format");
  }
  TemplateSlots slots{{"task", templates.get("task")},
                      {"labels", label_list(schema)},
                      {"format_instruction", format_instruction(schema, out_fmt, templates)},
                      {"document", doc.text},
                      {"exemplars", ""}};
  if (in_fmt == InputFormat::kSchemaDef) {
    if (!schema.has_all_descriptions()) {
      throw Error(ErrorCode::kMissingDescriptions, "schema '" + schema.name + "' lacks label descriptions");
    }
    std::string lines;
    for (const auto& spec : schema.labels) {
      if (!lines.empty()) lines += '\n';
      lines += templates.render("label_description", {{"label", spec.label}, {"description", *spec.description}});
    }
    slots["label_descriptions"] = lines;
  }
  if (exemplars != nullptr) {
    std::string blocks;
    for (const auto& ex : *exemplars) {
      std::string block = templates.render(
          "exemplar_block", {{"document", ex.document.text}, {"target", render_target(ex, out_fmt, schema)}});
      while (!block.empty() && block.back() == '\n') block.pop_back();
      if (!blocks.empty()) blocks += "\n\n";
      blocks += block;
    }
    slots["exemplars"] = "\n" + templates.render("exemplars_section", {{"blocks", blocks}}) + "\n";
  }
  Conversation conv;
  conv.add_user(templates.render(prompt_template_name(in_fmt, out_fmt), slots));
  return conv;
}

}  // namespace

Conversation build_zero_shot(const Document& doc, const DatasetSchema& schema, InputFormat in_fmt,
                             OutputFormat out_fmt, const TemplateCatalog& templates) {
  return build_prompt(doc, nullptr, schema, in_fmt, out_fmt, templates);
}

Conversation build_few_shot(const Document& doc, const std::vector<GoldInstance>& exemplars,
                            const DatasetSchema& schema, InputFormat in_fmt, OutputFormat out_fmt,
                            const TemplateCatalog& templates) {
  if (exemplars.empty()) throw Error(ErrorCode::kInvalidArgument, "few-shot prompt needs at least one exemplar");
  return build_prompt(doc, &exemplars, schema, in_fmt, out_fmt, templates);
}

namespace {

using GramCounts = std::vector<std::pair<std::string, uint64_t>>;

GramCounts gram_counts(std::string_view s) {
  const std::string lower = text::to_lower(s);
  std::vector<std::string> grams;
  if (lower.size() < 3) {
    if (!lower.empty()) grams.push_back(lower);
  } else {
    for (std::size_t i = 0; i + 3 <= lower.size(); ++i) grams.push_back(lower.substr(i, 3));
  }
  std::sort(grams.begin(), grams.end());
  GramCounts out;
  for (auto& g : grams) {
    if (!out.empty() && out.back().first == g) {
      ++out.back().second;
    } else {
      out.emplace_back(std::move(g), 1);
    }
  }
  return out;
}

uint64_t squared_norm(const GramCounts& v) {
  uint64_t n = 0;
  for (const auto& [g, c] : v) n += c * c;
  return n;
}

}  // namespace

double TrigramCosine::similarity(std::string_view a, std::string_view b) const {
  const GramCounts va = gram_counts(a);
  const GramCounts vb = gram_counts(b);
  uint64_t dot = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < va.size() && j < vb.size()) {
    if (va[i].first < vb[j].first) {
      ++i;
    } else if (vb[j].first < va[i].first) {
      ++j;
    } else {
      dot += va[i++].second * vb[j++].second;
    }
  }
  const uint64_t na = squared_norm(va);
  const uint64_t nb = squared_norm(vb);
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

std::vector<GoldInstance> retrieval_pool(const std::vector<GoldInstance>& pool, uint64_t seed) {
  if (pool.size() <= kRetrievalPoolSize) return pool;
  Rng rng(mix_seed(seed, fnv1a64("retrieval-pool")));
  std::vector<std::size_t> picks = rng.sample_indices(pool.size(), kRetrievalPoolSize);
  std::sort(picks.begin(), picks.end());
  std::vector<GoldInstance> out;
  out.reserve(picks.size());
  for (std::size_t i : picks) out.push_back(pool[i]);
  return out;
}

std::vector<GoldInstance> select_exemplars(const std::vector<GoldInstance>& pool, std::size_t k,
                                           SelectionStrategy strategy, uint64_t seed, std::size_t instance_index,
                                           const std::optional<Document>& query, const Similarity* similarity) {
  if (k == 0) return {};
  if (pool.size() < k) {
    throw Error(ErrorCode::kPoolTooSmall,
                "pool has " + std::to_string(pool.size()) + " instances, k=" + std::to_string(k));
  }
  std::vector<GoldInstance> out;
  if (strategy == SelectionStrategy::kRetrieval) {
    if (!query) throw Error(ErrorCode::kInvalidArgument, "RETRIEVAL selection needs a query document");
    const TrigramCosine fallback;
    const Similarity& sim = similarity != nullptr ? *similarity : fallback;
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) scored.emplace_back(sim.similarity(query->text, pool[i].document.text), i);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return pool[a.second].id() < pool[b.second].id();
    });
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[scored[i].second]);
    return out;
  }
  Rng rng(mix_seed(seed, fnv1a64("exemplars")));
  std::vector<std::size_t> picks = rng.sample_indices(pool.size(), k);
  if (strategy == SelectionStrategy::kRandomShuffled) {
    Rng order(mix_seed(mix_seed(seed, fnv1a64("exemplar-order")), instance_index));
    order.shuffle(picks);
  }
  for (std::size_t i : picks) out.push_back(pool[i]);
  return out;
}

}  // namespace defner
