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

// Concept-definition knowledge base, semantic-type allowlist and a
// dictionary entity linker.
//
// Snapshot format: UTF-8 TSV with the header row
//   cui  canonical_name  aliases  tui  definition  source
// aliases are pipe-separated, an empty definition cell means "no definition"
// and source is one of UMLS, WIKIDATA, GENERATED.

#ifndef DEFNER_KB_HPP_
#define DEFNER_KB_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "defner/corpus.hpp"
#include "defner/error.hpp"
#include "defner/extraction.hpp"

namespace defner {

class Gateway;
class TemplateCatalog;

enum class ConceptSource { kUmls, kWikidata, kGenerated };

std::string_view to_string(ConceptSource source);
ConceptSource concept_source_from_string(std::string_view s);

// Semantic type reserved for model-generated definitions. Never linkable
// under the default allowlist, but visible to lookup_definition.
inline constexpr std::string_view kGeneratedTui = "T000";
inline constexpr double kDefaultLinkThreshold = 0.7;

bool is_valid_tui(std::string_view tui);

struct Concept {
  std::string cui;
  std::string canonical_name;
  std::vector<std::string> aliases;  // always contains canonical_name
  std::string tui;
  std::optional<std::string> definition;
  ConceptSource source = ConceptSource::kUmls;

  bool operator==(const Concept&) const = default;
};

class SemanticTypeAllowlist {
 public:
  explicit SemanticTypeAllowlist(std::set<std::string> codes);

  // The curated fine-grained semantic types used for definition augmentation.
  static const SemanticTypeAllowlist& default_list();

  bool contains(std::string_view tui) const { return codes_.count(std::string(tui)) > 0; }
  const std::set<std::string>& codes() const { return codes_; }

 private:
  std::set<std::string> codes_;
};

// One code per line; blank lines and '#' comments are ignored.
SemanticTypeAllowlist parse_allowlist(std::istream& in);
SemanticTypeAllowlist load_allowlist(const std::filesystem::path& path);

struct LinkedMention {
  std::string span_text;
  std::string cui;
  std::string tui;
  double score = 0.0;
  std::size_t begin = 0;  // byte offsets into the linked text
  std::size_t end = 0;

  bool operator==(const LinkedMention&) const = default;
};

// Immutable after construction; safe to share between threads.
class KnowledgeBase {
 public:
  struct AliasEntry {
    std::string normalized;
    std::size_t concept_index = 0;
    std::vector<std::string> grams;
  };

  // Throws kDuplicateCui.
  explicit KnowledgeBase(std::vector<Concept> concepts);

  const std::vector<Concept>& concepts() const { return concepts_; }
  std::size_t size() const { return concepts_.size(); }
  bool empty() const { return concepts_.empty(); }
  const Concept* find(std::string_view cui) const;

  // Concept indices sharing the normalized alias, ordered by ascending cui.
  // Null when the alias is unknown.
  const std::vector<std::size_t>* lookup_alias(std::string_view normalized_alias) const;

  std::size_t max_alias_tokens() const { return max_alias_tokens_; }
  const std::vector<AliasEntry>& alias_entries() const { return alias_entries_; }
  // Trigram -> indices into alias_entries().
  const std::vector<std::size_t>* gram_postings(const std::string& gram) const;

 private:
  std::vector<Concept> concepts_;
  std::unordered_map<std::string, std::size_t> by_cui_;
  std::unordered_map<std::string, std::vector<std::size_t>> alias_index_;
  std::vector<AliasEntry> alias_entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> gram_index_;
  std::size_t max_alias_tokens_ = 0;
};

// Throws kMalformedRow (1-based row number, header is row 1) or kDuplicateCui.
KnowledgeBase parse_kb(std::istream& in, std::optional<ConceptSource> source_filter = std::nullopt);
KnowledgeBase load_kb(const std::filesystem::path& path, std::optional<ConceptSource> source_filter = std::nullopt);

void write_kb_header(std::ostream& out);
void write_kb_row(std::ostream& out, const Concept& c);

class MentionLinker {
 public:
  virtual ~MentionLinker() = default;
  // Mentions ordered by span start, non-overlapping.
  virtual std::vector<LinkedMention> link(std::string_view text, const SemanticTypeAllowlist& allowlist) const = 0;
};

// Greedy longest match of normalized token windows against the alias index.
// Tokens left uncovered are then matched by character-3-gram Jaccard
// similarity against aliases, with windows confined to the uncovered run.
// Exact hits score 1.0; fallback hits score in [threshold, 1).
class DictionaryLinker final : public MentionLinker {
 public:
  explicit DictionaryLinker(const KnowledgeBase& kb, double threshold = kDefaultLinkThreshold);

  std::vector<LinkedMention> link(std::string_view text, const SemanticTypeAllowlist& allowlist) const override;

 private:
  const KnowledgeBase& kb_;
  double threshold_;
};

std::vector<LinkedMention> link_mentions(std::string_view text, const KnowledgeBase& kb,
                                         const SemanticTypeAllowlist& allowlist,
                                         double threshold = kDefaultLinkThreshold);

struct DefinitionHit {
  std::string cui;
  std::string definition;
};

// Exact normalized-alias lookup. Among concepts sharing the alias the smallest
// cui wins; if that concept has no definition the result is empty.
std::optional<DefinitionHit> lookup_definition(std::string_view surface, const KnowledgeBase& kb);

struct DefinitionFailure {
  std::string term;
  ErrorCode code = ErrorCode::kTransportFailure;
  std::string message;
};

struct GeneratedDefinitions {
  std::vector<Concept> concepts;  // in term order, failed terms omitted
  std::vector<DefinitionFailure> failures;
};

inline constexpr int kDefinitionMaxTokens = 4096;

// Deterministic cui for a generated concept ("GEN-" + 12 hex digits).
std::string generated_cui(std::string_view term);

// One request per term, issued concurrently up to `concurrency`.
GeneratedDefinitions generate_definitions(const std::vector<std::string>& terms, Gateway& gateway,
                                          const TemplateCatalog& templates, const std::string& model_id,
                                          std::size_t concurrency = 1);

// Every linked mention becomes an entity. The type comes from tui_labels when
// the concept's tui is mapped there and names a schema label, otherwise the
// schema's first label.
ExtractionSet linker_as_extractor(std::string_view text, const KnowledgeBase& kb,
                                  const SemanticTypeAllowlist& allowlist, const DatasetSchema& schema,
                                  const std::map<std::string, std::string>& tui_labels = {},
                                  double threshold = kDefaultLinkThreshold);

}  // namespace defner

#endif  // DEFNER_KB_HPP_
