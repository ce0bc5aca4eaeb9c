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

#include "defner/kb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include "defner/digest.hpp"
#include "defner/llm_gateway.hpp"
#include "defner/templates.hpp"
#include "defner/text.hpp"

namespace defner {

std::string_view to_string(ConceptSource source) {
  switch (source) {
    case ConceptSource::kUmls: return "UMLS";
    case ConceptSource::kWikidata: return "WIKIDATA";
    case ConceptSource::kGenerated: return "GENERATED";
  }
  return "UMLS";
}

ConceptSource concept_source_from_string(std::string_view s) {
  if (s == "UMLS") return ConceptSource::kUmls;
  if (s == "WIKIDATA") return ConceptSource::kWikidata;
  if (s == "GENERATED") return ConceptSource::kGenerated;
  throw Error(ErrorCode::kInvalidArgument, "unknown concept source '" + std::string(s) + "'");
}

bool is_valid_tui(std::string_view tui) {
  return tui.size() == 4 && tui[0] == 'T' &&
         std::all_of(tui.begin() + 1, tui.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// ---------------------------------------------------------------------------
// Allowlist

SemanticTypeAllowlist::SemanticTypeAllowlist(std::set<std::string> codes) : codes_(std::move(codes)) {
  if (codes_.empty()) throw Error(ErrorCode::kConfig, "semantic type allowlist is empty");
  for (const auto& code : codes_) {
    if (!is_valid_tui(code)) throw Error(ErrorCode::kConfig, "invalid semantic type code '" + code + "'");
  }
}

const SemanticTypeAllowlist& SemanticTypeAllowlist::default_list() {
  static const SemanticTypeAllowlist kDefault({
      "T017", "T018", "T019", "T020", "T021", "T024", "T025", "T026", "T028", "T032", "T034", "T037", "T038",
      "T039", "T040", "T041", "T045", "T046", "T047", "T048", "T059", "T060", "T061", "T063", "T064", "T082",
      "T083", "T085", "T086", "T087", "T088", "T089", "T095", "T097", "T101", "T121", "T122", "T123", "T125",
      "T126", "T127", "T129", "T131", "T169", "T170", "T191", "T192", "T203", "T204",
  });
  return kDefault;
}

SemanticTypeAllowlist parse_allowlist(std::istream& in) {
  std::set<std::string> codes;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string_view code = text::trim(line);
    if (!code.empty()) codes.emplace(code);
  }
  return SemanticTypeAllowlist(std::move(codes));
}

SemanticTypeAllowlist load_allowlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open allowlist " + path.string());
  return parse_allowlist(in);
}

// ---------------------------------------------------------------------------
// Knowledge base

KnowledgeBase::KnowledgeBase(std::vector<Concept> concepts) : concepts_(std::move(concepts)) {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    Concept& c = concepts_[i];
    if (!by_cui_.emplace(c.cui, i).second) throw Error(ErrorCode::kDuplicateCui, "cui '" + c.cui + "'");
    if (std::find(c.aliases.begin(), c.aliases.end(), c.canonical_name) == c.aliases.end()) {
      c.aliases.insert(c.aliases.begin(), c.canonical_name);
    }
  }
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    std::vector<std::string> seen;
    for (const auto& alias : concepts_[i].aliases) {
      std::string norm = text::normalize(alias);
      if (norm.empty() || std::find(seen.begin(), seen.end(), norm) != seen.end()) continue;
      seen.push_back(norm);
      max_alias_tokens_ = std::max(max_alias_tokens_, text::word_spans(norm).size());
      alias_index_[norm].push_back(i);
      AliasEntry entry{norm, i, text::trigram_set(norm)};
      const std::size_t entry_index = alias_entries_.size();
      for (const auto& g : entry.grams) gram_index_[g].push_back(entry_index);
      alias_entries_.push_back(std::move(entry));
    }
  }
  for (auto& [alias, indices] : alias_index_) {
    std::sort(indices.begin(), indices.end(),
              [&](std::size_t a, std::size_t b) { return concepts_[a].cui < concepts_[b].cui; });
  }
}

const Concept* KnowledgeBase::find(std::string_view cui) const {
  auto it = by_cui_.find(std::string(cui));
  return it == by_cui_.end() ? nullptr : &concepts_[it->second];
}

const std::vector<std::size_t>* KnowledgeBase::lookup_alias(std::string_view normalized_alias) const {
  auto it = alias_index_.find(std::string(normalized_alias));
  return it == alias_index_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>* KnowledgeBase::gram_postings(const std::string& gram) const {
  auto it = gram_index_.find(gram);
  return it == gram_index_.end() ? nullptr : &it->second;
}

namespace {

const std::vector<std::string> kKbColumns = {"cui", "canonical_name", "aliases", "tui", "definition", "source"};

[[noreturn]] void bad_row(std::size_t row, const std::string& why) {
  throw Error(ErrorCode::kMalformedRow, "row " + std::to_string(row) + ": " + why);
}

}  // namespace

KnowledgeBase parse_kb(std::istream& in, std::optional<ConceptSource> source_filter) {
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) bad_row(1, "missing header");
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (text::split(line, "\t") != kKbColumns) {
    bad_row(1, "header must be exactly: cui, canonical_name, aliases, tui, definition, source");
  }
  std::vector<Concept> concepts;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    std::vector<std::string> cells = text::split(line, "\t");
    if (cells.size() != kKbColumns.size()) {
      bad_row(row, "expected 6 tab-separated columns, got " + std::to_string(cells.size()));
    }
    Concept c;
    c.cui = std::string(text::trim(cells[0]));
    c.canonical_name = std::string(text::trim(cells[1]));
    c.tui = std::string(text::trim(cells[3]));
    if (c.cui.empty()) bad_row(row, "empty cui");
    if (text::normalize(c.canonical_name).empty()) bad_row(row, "empty canonical_name");
    if (!is_valid_tui(c.tui)) bad_row(row, "tui '" + c.tui + "' does not match T###");
    try {
      c.source = concept_source_from_string(text::trim(cells[5]));
    } catch (const Error&) {
      bad_row(row, "unknown source '" + cells[5] + "'");
    }
    for (auto& alias : text::split(cells[2], "|")) {
      std::string a(text::trim(alias));
      if (!a.empty() && std::find(c.aliases.begin(), c.aliases.end(), a) == c.aliases.end()) c.aliases.push_back(a);
    }
    const std::string_view def = text::trim(cells[4]);
    if (!def.empty()) c.definition = std::string(def);
    if (source_filter && c.source != *source_filter) continue;
    concepts.push_back(std::move(c));
  }
  return KnowledgeBase(std::move(concepts));
}

KnowledgeBase load_kb(const std::filesystem::path& path, std::optional<ConceptSource> source_filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open knowledge base " + path.string());
  return parse_kb(in, source_filter);
}

void write_kb_header(std::ostream& out) {
  for (std::size_t i = 0; i < kKbColumns.size(); ++i) out << (i ? "\t" : "") << kKbColumns[i];
  out << '\n';
}

void write_kb_row(std::ostream& out, const Concept& c) {
  std::string aliases;
  for (const auto& a : c.aliases) {
    if (!aliases.empty()) aliases += '|';
    aliases += text::sanitize_cell(a);
  }
  out << text::sanitize_cell(c.cui) << '\t' << text::sanitize_cell(c.canonical_name) << '\t' << aliases << '\t'
      << c.tui << '\t' << text::sanitize_cell(c.definition.value_or("")) << '\t' << to_string(c.source) << '\n';
}

// ---------------------------------------------------------------------------
// Linking

DictionaryLinker::DictionaryLinker(const KnowledgeBase& kb, double threshold) : kb_(kb), threshold_(threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be in [0,1]");
}

namespace {

constexpr std::size_t kMaxWindowTokens = 10;
// Fallback matching ignores windows shorter than this many bytes; very short
// strings share too few trigrams to say anything.
constexpr std::size_t kMinFuzzyBytes = 4;

struct Candidate {
  std::size_t concept_index = 0;
  double score = 0.0;
};

std::optional<Candidate> best_exact(const KnowledgeBase& kb, const std::string& norm,
                                    const SemanticTypeAllowlist& allowlist) {
  const auto* hits = kb.lookup_alias(norm);
  if (hits == nullptr) return std::nullopt;
  for (std::size_t idx : *hits) {  // ordered by cui
    if (allowlist.contains(kb.concepts()[idx].tui)) return Candidate{idx, 1.0};
  }
  return std::nullopt;
}

std::optional<Candidate> best_fuzzy(const KnowledgeBase& kb, const std::string& norm,
                                    const SemanticTypeAllowlist& allowlist, double threshold) {
  if (norm.size() < kMinFuzzyBytes) return std::nullopt;
  const std::vector<std::string> grams = text::trigram_set(norm);
  std::unordered_map<std::size_t, std::size_t> shared;
  for (const auto& g : grams) {
    if (const auto* postings = kb.gram_postings(g)) {
      for (std::size_t entry : *postings) ++shared[entry];
    }
  }
  std::optional<Candidate> best;
  for (const auto& [entry_index, inter] : shared) {
    const auto& entry = kb.alias_entries()[entry_index];
    const Concept& c = kb.concepts()[entry.concept_index];
    if (!allowlist.contains(c.tui)) continue;
    const double uni = static_cast<double>(grams.size() + entry.grams.size() - inter);
    double score = static_cast<double>(inter) / uni;
    if (score < threshold) continue;
    // Only exact alias hits may score 1.0.
    if (score >= 1.0) score = std::nextafter(1.0, 0.0);
    const bool better = !best || score > best->score ||
                        (score == best->score && c.cui < kb.concepts()[best->concept_index].cui);
    if (better) best = Candidate{entry.concept_index, score};
  }
  return best;
}

}  // namespace

std::vector<LinkedMention> DictionaryLinker::link(std::string_view input, const SemanticTypeAllowlist& allowlist) const {
  std::vector<LinkedMention> mentions;
  const std::vector<text::TokenSpan> tokens = text::word_spans(input);
  const std::size_t max_window = std::min(kMaxWindowTokens, std::max<std::size_t>(1, kb_.max_alias_tokens()));

  auto window_text = [&](std::size_t i, std::size_t len) {
    return input.substr(tokens[i].begin, tokens[i + len - 1].end - tokens[i].begin);
  };
  auto accept = [&](std::size_t i, std::size_t len, const Candidate& cand) {
    const Concept& c = kb_.concepts()[cand.concept_index];
    mentions.push_back({std::string(window_text(i, len)), c.cui, c.tui, cand.score, tokens[i].begin,
                        tokens[i + len - 1].end});
  };

  // Exact windows first, so a fuzzy window never swallows the start of an
  // exact alias; fuzzy matching then runs inside the remaining gaps.
  std::vector<bool> covered(tokens.size(), false);
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(max_window, tokens.size() - i);
    std::size_t matched = 0;
    for (std::size_t len = longest; len >= 1 && matched == 0; --len) {
      if (auto cand = best_exact(kb_, text::normalize(window_text(i, len)), allowlist)) {
        accept(i, len, *cand);
        matched = len;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    std::fill(covered.begin() + static_cast<std::ptrdiff_t>(i), covered.begin() + static_cast<std::ptrdiff_t>(i + matched),
              true);
    i += matched;
  }
  i = 0;
  while (i < tokens.size()) {
    if (covered[i]) {
      ++i;
      continue;
    }
    std::size_t gap_end = i;
    while (gap_end < tokens.size() && !covered[gap_end]) ++gap_end;
    const std::size_t longest = std::min(max_window, gap_end - i);
    std::size_t matched = 0;
    for (std::size_t len = longest; len >= 1 && matched == 0; --len) {
      if (auto cand = best_fuzzy(kb_, text::normalize(window_text(i, len)), allowlist, threshold_)) {
        accept(i, len, *cand);
        matched = len;
      }
    }
    i += matched == 0 ? 1 : matched;
  }
  std::sort(mentions.begin(), mentions.end(),
            [](const LinkedMention& a, const LinkedMention& b) { return a.begin < b.begin; });
  return mentions;
}

std::vector<LinkedMention> link_mentions(std::string_view input, const KnowledgeBase& kb,
                                         const SemanticTypeAllowlist& allowlist, double threshold) {
  return DictionaryLinker(kb, threshold).link(input, allowlist);
}

std::optional<DefinitionHit> lookup_definition(std::string_view surface, const KnowledgeBase& kb) {
  const auto* hits = kb.lookup_alias(text::normalize(surface));
  if (hits == nullptr || hits->empty()) return std::nullopt;
  const Concept& winner = kb.concepts()[hits->front()];
  if (!winner.definition || winner.definition->empty()) return std::nullopt;
  return DefinitionHit{winner.cui, *winner.definition};
}

// ---------------------------------------------------------------------------
// Generated definitions

std::string generated_cui(std::string_view term) { return "GEN-" + sha256_hex(text::normalize(term)).substr(0, 12); }

GeneratedDefinitions generate_definitions(const std::vector<std::string>& terms, Gateway& gateway,
                                          const TemplateCatalog& templates, const std::string& model_id,
                                          std::size_t concurrency) {
  struct Outcome {
    std::optional<Concept> made;
    std::optional<DefinitionFailure> failure;
  };
  std::vector<Outcome> outcomes(terms.size());

  auto work = [&](std::size_t i) {
    const std::string term(text::trim(terms[i]));
    try {
      ChatRequest request;
      request.model_id = model_id;
      request.max_tokens = kDefinitionMaxTokens;
      request.messages.add_user(templates.render("generate_definition", {{"term", term}}));
      const ChatResponse response = gateway.complete(request);
      const std::string definition = text::sanitize_cell(response.text);
      if (definition.empty()) {
        outcomes[i].failure = DefinitionFailure{term, ErrorCode::kTransportFailure, "empty completion"};
        return;
      }
      outcomes[i].made = Concept{generated_cui(term), term, {term}, std::string(kGeneratedTui), definition,
                                    ConceptSource::kGenerated};
    } catch (const Error& e) {
      outcomes[i].failure = DefinitionFailure{term, e.code(), e.what()};
    }
  };

  if (!gateway.order_independent()) concurrency = 1;
  concurrency = std::max<std::size_t>(1, std::min(concurrency, terms.size()));
  if (concurrency == 1) {
    for (std::size_t i = 0; i < terms.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < concurrency; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < terms.size(); i = next++) work(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  GeneratedDefinitions out;
  for (auto& o : outcomes) {
    if (o.made) out.concepts.push_back(std::move(*o.made));
    if (o.failure) out.failures.push_back(std::move(*o.failure));
  }
  return out;
}

ExtractionSet linker_as_extractor(std::string_view input, const KnowledgeBase& kb,
                                  const SemanticTypeAllowlist& allowlist, const DatasetSchema& schema,
                                  const std::map<std::string, std::string>& tui_labels, double threshold) {
  ExtractionSet out;
  for (const auto& m : link_mentions(input, kb, allowlist, threshold)) {
    std::string label = schema.labels.front().label;
    if (auto it = tui_labels.find(m.tui); it != tui_labels.end() && schema.has_label(it->second)) label = it->second;
    out.entities.push_back({m.span_text, std::move(label)});
  }
  return out;
}

}  // namespace defner
