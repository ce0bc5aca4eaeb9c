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

#include "defner/parsing.hpp"

#include <cctype>
#include <optional>

#include <nlohmann/json.hpp>

#include "defner/error.hpp"
#include "defner/text.hpp"

namespace defner {

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::kClean: return "CLEAN";
    case ParseStatus::kRepaired: return "REPAIRED";
    case ParseStatus::kFailed: return "FAILED";
  }
  return "FAILED";
}

ParseStatus parse_status_from_string(std::string_view s) {
  if (s == "CLEAN") return ParseStatus::kClean;
  if (s == "REPAIRED") return ParseStatus::kRepaired;
  if (s == "FAILED") return ParseStatus::kFailed;
  throw Error(ErrorCode::kInvalidArgument, "unknown parse status '" + std::string(s) + "'");
}

ExtractionSet ExtractionSet::failed(std::string reason) {
  ExtractionSet out;
  out.status = ParseStatus::kFailed;
  out.log.push_back(std::move(reason));
  return out;
}

namespace {

using ojson = nlohmann::ordered_json;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// ---------------------------------------------------------------------------
// JSON

std::string strip_fences_and_prose(std::string_view s) {
  std::string_view body = s;
  const std::size_t fence = body.find("```");
  if (fence != std::string_view::npos) {
    std::size_t start = body.find('\n', fence);
    start = start == std::string_view::npos ? fence + 3 : start + 1;
    const std::size_t close = body.find("```", start);
    body = body.substr(start, close == std::string_view::npos ? std::string_view::npos : close - start);
  }
  const std::size_t open = body.find('{');
  const std::size_t last = body.rfind('}');
  if (open != std::string_view::npos && last != std::string_view::npos && last > open) {
    body = body.substr(open, last - open + 1);
  }
  return std::string(text::trim(body));
}

std::string remove_trailing_commas(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < s.size()) {
        out.push_back(s[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

bool closes_single_quote(std::string_view s, std::size_t i) {
  std::size_t j = i + 1;
  while (j < s.size() && is_space(s[j])) ++j;
  return j == s.size() || s[j] == ',' || s[j] == ':' || s[j] == ']' || s[j] == '}';
}

std::string single_to_double_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 8);
  enum { kNone, kDouble, kSingle } state = kNone;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    switch (state) {
      case kNone:
        if (c == '"') state = kDouble;
        if (c == '\'') {
          state = kSingle;
          out.push_back('"');
        } else {
          out.push_back(c);
        }
        break;
      case kDouble:
        out.push_back(c);
        if (c == '\\' && i + 1 < s.size()) {
          out.push_back(s[++i]);
        } else if (c == '"') {
          state = kNone;
        }
        break;
      case kSingle:
        if (c == '\\' && i + 1 < s.size()) {
          const char n = s[++i];
          if (n == '\'') {
            out.push_back('\'');
          } else {
            out.push_back('\\');
            out.push_back(n);
          }
        } else if (c == '"') {
          out += "\\\"";
        } else if (c == '\'' && closes_single_quote(s, i)) {
          out.push_back('"');
          state = kNone;
        } else {
          out.push_back(c);
        }
        break;
    }
  }
  return out;
}

std::optional<ojson> try_parse(const std::string& s, const DatasetSchema& schema) {
  ojson doc = ojson::parse(s, nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  if (doc.is_object() || (doc.is_array() && schema.single_type())) return doc;
  return std::nullopt;
}

void add_value(const ojson& value, const std::string& label, const std::string& key, ExtractionSet& out) {
  auto push = [&](const ojson& item) {
    std::string surface;
    if (item.is_string()) {
      surface = item.get<std::string>();
    } else if (item.is_number() || item.is_boolean()) {
      surface = item.dump();
    } else {
      if (!item.is_null()) out.log.push_back("warning: non-string item under '" + key + "' dropped");
      return;
    }
    if (text::trim(surface).empty()) return;
    out.entities.push_back({std::move(surface), label});
  };
  if (value.is_array()) {
    for (const auto& item : value) push(item);
  } else {
    if (!value.is_null()) out.log.push_back("warning: scalar under '" + key + "' wrapped into a list");
    push(value);
  }
}

ExtractionSet entities_from_json(const ojson& doc, const DatasetSchema& schema) {
  ExtractionSet out;
  if (doc.is_array()) {
    out.log.push_back("warning: bare list assigned to the sole label");
    add_value(doc, schema.labels.front().label, schema.labels.front().label, out);
    return out;
  }
  for (const auto& [key, value] : doc.items()) {
    const auto label = schema.canonical_label(key);
    if (!label) {
      out.log.push_back("warning: non-schema key '" + key + "' dropped");
      continue;
    }
    add_value(value, *label, key, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Code

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Decodes a quoted literal starting at s[i]; advances i past the closing
// quote. Returns nullopt for an unterminated literal.
std::optional<std::string> read_string_literal(std::string_view s, std::size_t& i) {
  const char quote = s[i];
  std::string raw(1, '"');
  std::size_t j = i + 1;
  for (; j < s.size(); ++j) {
    const char c = s[j];
    if (c == '\\' && j + 1 < s.size()) {
      const char n = s[++j];
      if (n == '\'') {
        raw.push_back('\'');
      } else {
        raw.push_back('\\');
        raw.push_back(n);
      }
    } else if (c == quote) {
      break;
    } else if (c == '"') {
      raw += "\\\"";
    } else if (c == '\n') {
      return std::nullopt;
    } else {
      raw.push_back(c);
    }
  }
  if (j >= s.size()) return std::nullopt;
  i = j + 1;
  raw.push_back('"');
  const auto decoded = nlohmann::json::parse(raw, nullptr, false);
  if (decoded.is_string()) return decoded.get<std::string>();
  return raw.substr(1, raw.size() - 2);
}

// ---------------------------------------------------------------------------
// Linearized

void add_linear_item(std::string_view item, const std::optional<std::string>& label, ExtractionSet& out) {
  const std::string_view surface = text::trim(item);
  if (surface.empty() || !label) {
    out.log.push_back("MALFORMED_ITEM: '" + std::string(item) + "'");
    return;
  }
  out.entities.push_back({std::string(surface), *label});
}

}  // namespace

ExtractionSet parse_json_output(std::string_view completion, const DatasetSchema& schema) {
  std::string current(text::trim(completion));
  if (auto doc = try_parse(current, schema)) return entities_from_json(*doc, schema);

  struct Step {
    const char* name;
    std::string (*apply)(std::string_view);
  };
  static constexpr Step kSteps[] = {
      {"fence/prose strip", strip_fences_and_prose},
      {"trailing-comma removal", remove_trailing_commas},
      {"single-to-double quote normalization", single_to_double_quotes},
  };
  std::vector<std::string> repairs;
  for (const Step& step : kSteps) {
    std::string next = step.apply(current);
    if (next == current) continue;
    current = std::move(next);
    repairs.push_back(std::string("repair: ") + step.name);
    if (auto doc = try_parse(current, schema)) {
      ExtractionSet out = entities_from_json(*doc, schema);
      out.status = ParseStatus::kRepaired;
      out.log.insert(out.log.begin(), repairs.begin(), repairs.end());
      return out;
    }
  }
  return ExtractionSet::failed("no JSON object found");
}

ExtractionSet parse_code_output(std::string_view s, const DatasetSchema& schema) {
  ExtractionSet out;
  bool matched = false;
  std::size_t line_start = 0;
  while (line_start < s.size()) {
    std::size_t i = line_start;
    std::size_t next_line = s.find('\n', line_start);
    next_line = next_line == std::string_view::npos ? s.size() : next_line + 1;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || !ident_start(s[i])) {
      line_start = next_line;
      continue;
    }
    const std::size_t ident_begin = i;
    while (i < s.size() && ident_char(s[i])) ++i;
    const std::string ident(s.substr(ident_begin, i - ident_begin));
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || s[i] != '=' || (i + 1 < s.size() && s[i + 1] == '=')) {
      line_start = next_line;
      continue;
    }
    ++i;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || s[i] != '[') {
      line_start = next_line;
      continue;
    }
    ++i;

    std::vector<std::string> items;
    bool closed = false;
    while (i < s.size()) {
      const char c = s[i];
      if (is_space(c) || c == ',') {
        ++i;
      } else if (c == ']') {
        ++i;
        closed = true;
        break;
      } else if (c == '"' || c == '\'') {
        auto item = read_string_literal(s, i);
        if (!item) break;
        items.push_back(std::move(*item));
      } else {
        const std::size_t tok = i;
        while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '\n') ++i;
        out.log.push_back("warning: non-string item '" + std::string(text::trim(s.substr(tok, i - tok))) +
                          "' in '" + ident + "' dropped");
      }
    }
    if (!closed) {
      out.log.push_back("warning: unterminated list for '" + ident + "'");
      line_start = next_line;
      continue;
    }
    const auto label = schema.canonical_label(ident);
    if (!label) {
      out.log.push_back("warning: non-schema assignment '" + ident + "' dropped");
    } else {
      matched = true;
      for (auto& item : items) {
        if (!text::trim(item).empty()) out.entities.push_back({std::move(item), *label});
      }
    }
    const std::size_t nl = s.find('\n', std::min(i, s.size()));
    line_start = nl == std::string_view::npos ? s.size() : nl + 1;
  }
  if (!matched) {
    ExtractionSet failed = ExtractionSet::failed("no assignment to a schema label found");
    failed.log.insert(failed.log.end(), out.log.begin(), out.log.end());
    return failed;
  }
  return out;
}

ExtractionSet parse_linearized(std::string_view completion, const DatasetSchema& schema) {
  ExtractionSet out;
  std::string_view body = text::trim(completion);
  if (body.empty()) return out;
  if (schema.single_type()) {
    const std::string label = schema.labels.front().label;
    for (const auto& item : text::split(body, kLinearSep)) add_linear_item(item, label, out);
  } else {
    if (body.front() == '[') body.remove_prefix(1);
    if (!body.empty() && body.back() == ']') body.remove_suffix(1);
    if (text::trim(body).empty()) return out;
    std::string pending;
    for (const auto& piece : text::split(body, ",")) {
      pending = pending.empty() ? piece : pending + "," + piece;
      const std::size_t colon = pending.rfind(':');
      if (piece.find(':') == std::string::npos) continue;
      add_linear_item(std::string_view(pending).substr(0, colon),
                      schema.canonical_label(text::trim(std::string_view(pending).substr(colon + 1))), out);
      pending.clear();
    }
    if (!text::trim(pending).empty()) add_linear_item(pending, std::nullopt, out);
  }
  if (out.entities.empty()) {
    ExtractionSet failed = ExtractionSet::failed("no well-formed item");
    failed.log.insert(failed.log.end(), out.log.begin(), out.log.end());
    return failed;
  }
  return out;
}

ExtractionSet parse_output(std::string_view completion, const DatasetSchema& schema, OutputFormat out_fmt) {
  switch (out_fmt) {
    case OutputFormat::kJson: return parse_json_output(completion, schema);
    case OutputFormat::kCode: return parse_code_output(completion, schema);
    case OutputFormat::kLinearized: return parse_linearized(completion, schema);
  }
  return ExtractionSet::failed("unknown output format");
}

ExtractionSet parse_followup(std::string_view completion, const DatasetSchema& schema, OutputFormat out_fmt) {
  return parse_output(completion, schema, out_fmt);
}

const ExtractionSet& resolve_followup(const ExtractionSet& previous, const ExtractionSet& followup) {
  return followup.status == ParseStatus::kFailed ? previous : followup;
}

}  // namespace defner
