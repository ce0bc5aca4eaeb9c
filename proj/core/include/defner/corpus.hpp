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

// Annotated NER corpora: documents, gold entities, label schemas and the
// line-delimited dataset format.
//
// Dataset file: one JSON object per line,
//   {"id": "...", "split": "train"|"test", "text": "...",
//    "entities": [{"surface": "...", "type": "..."}]}
// Character offsets ("start"/"end") inside entity objects are accepted and
// ignored; gold is compared by surface form only.
//
// Schema file: {"name": "...", "open_schema": false,
//               "labels": [{"label": "...", "description": "..."}]}

#ifndef DEFNER_CORPUS_HPP_
#define DEFNER_CORPUS_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace defner {

struct Document {
  std::string id;
  std::string text;

  bool operator==(const Document&) const = default;
};

struct TypedEntity {
  std::string surface;
  std::string entity_type;

  auto operator<=>(const TypedEntity&) const = default;
};

struct GoldInstance {
  Document document;
  std::vector<TypedEntity> entities;

  const std::string& id() const { return document.id; }
  bool operator==(const GoldInstance&) const = default;
};

struct LabelSpec {
  std::string label;
  std::optional<std::string> description;

  bool operator==(const LabelSpec&) const = default;
};

struct DatasetSchema {
  std::string name;
  std::vector<LabelSpec> labels;
  // Single catch-all type (e.g. "Biomedical Concepts"), scored type-insensitively.
  bool open_schema = false;

  bool has_label(std::string_view label) const;
  // Case-insensitive lookup; returns the canonical spelling.
  std::optional<std::string> canonical_label(std::string_view label) const;
  bool has_all_descriptions() const;
  bool single_type() const { return labels.size() == 1; }
  std::vector<std::string> label_names() const;

  bool operator==(const DatasetSchema&) const = default;
};

struct Dataset {
  DatasetSchema schema;
  std::vector<GoldInstance> train_pool;
  std::vector<GoldInstance> test;

  bool operator==(const Dataset&) const = default;
};

DatasetSchema parse_schema(std::string_view json_text);
DatasetSchema load_schema(const std::filesystem::path& path);

// Throws Error with kMalformedRecord (line number in message), kUnknownLabel
// or kDuplicateId.
Dataset parse_dataset(std::istream& in, const DatasetSchema& schema);
Dataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& schema_path);
Dataset load_dataset(const std::filesystem::path& data_path, const DatasetSchema& schema);

// Writes the train pool then the test split in the line-delimited format.
void write_dataset(std::ostream& out, const Dataset& dataset);
std::string schema_to_json(const DatasetSchema& schema);

// Replaces the test split with n instances drawn without replacement. The
// selected instances keep their original relative order. Identity when
// n >= test size.
Dataset subsample_test(const Dataset& dataset, std::size_t n, uint64_t seed);

}  // namespace defner

#endif  // DEFNER_CORPUS_HPP_
