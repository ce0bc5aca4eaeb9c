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

#include "defner/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "defner/error.hpp"
#include "defner/rng.hpp"
#include "defner/text.hpp"

namespace defner {

using nlohmann::json;

bool DatasetSchema::has_label(std::string_view label) const {
  return std::any_of(labels.begin(), labels.end(), [&](const LabelSpec& l) { return l.label == label; });
}

std::optional<std::string> DatasetSchema::canonical_label(std::string_view label) const {
  for (const auto& l : labels) {
    if (l.label == label) return l.label;
  }
  const std::string wanted = text::to_lower(text::trim(label));
  const std::string wanted_snake = text::snake_case(label);
  for (const auto& l : labels) {
    if (text::to_lower(l.label) == wanted || text::snake_case(l.label) == wanted_snake) return l.label;
  }
  return std::nullopt;
}

bool DatasetSchema::has_all_descriptions() const {
  return std::all_of(labels.begin(), labels.end(), [](const LabelSpec& l) {
    return l.description.has_value() && !text::trim(*l.description).empty();
  });
}

std::vector<std::string> DatasetSchema::label_names() const {
  std::vector<std::string> names;
  names.reserve(labels.size());
  for (const auto& l : labels) names.push_back(l.label);
  return names;
}

DatasetSchema parse_schema(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("schema is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("name") || !doc.contains("labels") || !doc["labels"].is_array()) {
    throw Error(ErrorCode::kMalformedRecord, "schema requires 'name' and a 'labels' array");
  }
  DatasetSchema schema;
  schema.name = doc["name"].get<std::string>();
  schema.open_schema = doc.value("open_schema", false);
  std::set<std::string> seen;
  for (const auto& entry : doc["labels"]) {
    LabelSpec spec;
    if (entry.is_string()) {
      spec.label = entry.get<std::string>();
    } else if (entry.is_object() && entry.contains("label") && entry["label"].is_string()) {
      spec.label = entry["label"].get<std::string>();
      if (entry.contains("description") && entry["description"].is_string()) {
        spec.description = entry["description"].get<std::string>();
      }
    } else {
      throw Error(ErrorCode::kMalformedRecord, "schema label entries need a string 'label'");
    }
    if (text::trim(spec.label).empty()) throw Error(ErrorCode::kMalformedRecord, "empty schema label");
    if (!seen.insert(spec.label).second) {
      throw Error(ErrorCode::kMalformedRecord, "duplicate schema label '" + spec.label + "'");
    }
    schema.labels.push_back(std::move(spec));
  }
  if (schema.labels.empty()) throw Error(ErrorCode::kMalformedRecord, "schema has no labels");
  if (schema.open_schema && schema.labels.size() != 1) {
    throw Error(ErrorCode::kMalformedRecord, "open schema must declare exactly one label");
  }
  return schema;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) + ": " + why);
}

TypedEntity parse_entity(const json& e, std::size_t line_no) {
  if (!e.is_object()) malformed(line_no, "entity must be an object");
  for (const auto& [key, value] : e.items()) {
    if (key != "surface" && key != "type" && key != "start" && key != "end" && key != "offsets") {
      malformed(line_no, "unexpected entity field '" + key + "'");
    }
  }
  if (!e.contains("surface") || !e["surface"].is_string()) malformed(line_no, "entity needs a string 'surface'");
  if (!e.contains("type") || !e["type"].is_string()) malformed(line_no, "entity needs a string 'type'");
  TypedEntity entity{e["surface"].get<std::string>(), e["type"].get<std::string>()};
  if (text::trim(entity.surface).empty()) malformed(line_no, "entity surface is empty");
  return entity;
}

json to_json(const GoldInstance& g, std::string_view split) {
  json entities = json::array();
  for (const auto& e : g.entities) entities.push_back({{"surface", e.surface}, {"type", e.entity_type}});
  json record;
  record["id"] = g.document.id;
  record["split"] = split;
  record["text"] = g.document.text;
  record["entities"] = std::move(entities);
  return record;
}

}  // namespace

DatasetSchema load_schema(const std::filesystem::path& path) { return parse_schema(read_file(path)); }

Dataset parse_dataset(std::istream& in, const DatasetSchema& schema) {
  Dataset dataset;
  dataset.schema = schema;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      malformed(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) malformed(line_no, "record must be an object");
    for (const auto& [key, value] : record.items()) {
      if (key != "id" && key != "split" && key != "text" && key != "entities") {
        malformed(line_no, "unexpected field '" + key + "'");
      }
    }
    if (!record.contains("id") || !record["id"].is_string()) malformed(line_no, "missing string 'id'");
    if (!record.contains("split") || !record["split"].is_string()) malformed(line_no, "missing string 'split'");
    if (!record.contains("text") || !record["text"].is_string()) malformed(line_no, "missing string 'text'");
    if (!record.contains("entities") || !record["entities"].is_array()) malformed(line_no, "missing 'entities' array");

    GoldInstance instance;
    instance.document.id = record["id"].get<std::string>();
    instance.document.text = record["text"].get<std::string>();
    if (instance.document.id.empty()) malformed(line_no, "empty id");
    if (text::trim(instance.document.text).empty()) malformed(line_no, "empty text");
    for (const auto& e : record["entities"]) {
      TypedEntity entity = parse_entity(e, line_no);
      if (!schema.has_label(entity.entity_type)) {
        throw Error(ErrorCode::kUnknownLabel, "line " + std::to_string(line_no) + ": label '" + entity.entity_type +
                                                  "' is not in schema '" + schema.name + "'");
      }
      instance.entities.push_back(std::move(entity));
    }
    if (!ids.insert(instance.document.id).second) {
      throw Error(ErrorCode::kDuplicateId, "line " + std::to_string(line_no) + ": id '" + instance.document.id + "'");
    }
    const std::string split = record["split"].get<std::string>();
    if (split == "train") {
      dataset.train_pool.push_back(std::move(instance));
    } else if (split == "test") {
      dataset.test.push_back(std::move(instance));
    } else {
      malformed(line_no, "split must be 'train' or 'test', got '" + split + "'");
    }
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& data_path, const DatasetSchema& schema) {
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + data_path.string());
  return parse_dataset(in, schema);
}

Dataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& schema_path) {
  return load_dataset(data_path, load_schema(schema_path));
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& g : dataset.train_pool) out << to_json(g, "train").dump() << '\n';
  for (const auto& g : dataset.test) out << to_json(g, "test").dump() << '\n';
}

std::string schema_to_json(const DatasetSchema& schema) {
  json labels = json::array();
  for (const auto& l : schema.labels) {
    json entry{{"label", l.label}};
    if (l.description) entry["description"] = *l.description;
    labels.push_back(std::move(entry));
  }
  json doc{{"name", schema.name}, {"open_schema", schema.open_schema}, {"labels", std::move(labels)}};
  return doc.dump(2);
}

Dataset subsample_test(const Dataset& dataset, std::size_t n, uint64_t seed) {
  if (n >= dataset.test.size()) return dataset;
  Rng rng(seed);
  std::vector<std::size_t> picked = rng.sample_indices(dataset.test.size(), n);
  std::sort(picked.begin(), picked.end());
  Dataset out;
  out.schema = dataset.schema;
  out.train_pool = dataset.train_pool;
  out.test.reserve(n);
  for (std::size_t i : picked) out.test.push_back(dataset.test[i]);
  return out;
}

}  // namespace defner
