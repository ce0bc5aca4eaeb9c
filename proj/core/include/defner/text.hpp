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

// UTF-8 text helpers shared by the linker, the parsers and the scorer.

#ifndef DEFNER_TEXT_HPP_
#define DEFNER_TEXT_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace defner::text {

struct NormalizeOptions {
  bool lowercase = true;
  bool collapse_whitespace = true;
  bool strip_edge_punct = true;
};

// Applies the enabled steps in a fixed order. Leading and trailing whitespace
// is always trimmed. The result is a fixed point: normalize(normalize(s)) ==
// normalize(s) for any options.
std::string normalize(std::string_view s, const NormalizeOptions& options = {});

// Unicode simple lowercase mapping, code point by code point.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

// Byte span [begin, end) of a maximal run of letters and digits.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<TokenSpan> word_spans(std::string_view s);

// Whitespace-separated tokens.
std::vector<std::string> split_whitespace(std::string_view s);

std::vector<std::string> split(std::string_view s, std::string_view delimiter);

// Sorted, de-duplicated character 3-grams of s (byte level). Strings shorter
// than three bytes yield the whole string as a single gram.
std::vector<std::string> trigram_set(std::string_view s);

// label -> "label" in lower snake case: "Rheumatic Diseases" -> "rheumatic_diseases".
std::string snake_case(std::string_view label);

// Replaces tabs and newlines with single spaces so the value fits a TSV cell.
std::string sanitize_cell(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace defner::text

#endif  // DEFNER_TEXT_HPP_
