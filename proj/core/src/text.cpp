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

#include "defner/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cctype>

namespace defner::text {
namespace {

std::vector<UChar32> decode(std::string_view s) {
  std::vector<UChar32> out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, c, error);
  if (error) return;
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string encode(const std::vector<UChar32>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (UChar32 c : cps) append_utf8(out, c);
  return out;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }
bool is_punct(UChar32 c) { return u_ispunct(c) != 0; }

}  // namespace

std::string normalize(std::string_view s, const NormalizeOptions& options) {
  std::vector<UChar32> cps = decode(s);
  if (options.lowercase) {
    for (UChar32& c : cps) c = u_tolower(c);
  }

  std::vector<UChar32> spaced;
  spaced.reserve(cps.size());
  for (UChar32 c : cps) {
    if (options.collapse_whitespace && is_space(c)) {
      if (!spaced.empty() && spaced.back() == U' ') continue;
      spaced.push_back(U' ');
    } else {
      spaced.push_back(c);
    }
  }

  auto strip = [&](UChar32 c) {
    return is_space(c) || (options.strip_edge_punct && is_punct(c));
  };
  auto first = std::find_if_not(spaced.begin(), spaced.end(), strip);
  auto last = std::find_if_not(spaced.rbegin(), std::make_reverse_iterator(first), strip).base();
  return encode(std::vector<UChar32>(first, last));
}

std::string to_lower(std::string_view s) {
  std::vector<UChar32> cps = decode(s);
  for (UChar32& c : cps) c = u_tolower(c);
  return encode(cps);
}

std::string_view trim(std::string_view s) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) { return to_lower(a) == to_lower(b); }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<TokenSpan> word_spans(std::string_view s) {
  std::vector<TokenSpan> spans;
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  bool in_word = false;
  std::size_t start = 0;
  while (i < length) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    const bool word_char = c >= 0 && u_isalnum(c);
    if (word_char && !in_word) {
      in_word = true;
      start = static_cast<std::size_t>(at);
    } else if (!word_char && in_word) {
      in_word = false;
      spans.push_back({start, static_cast<std::size_t>(at)});
    }
  }
  if (in_word) spans.push_back({start, s.size()});
  return spans;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split(std::string_view s, std::string_view delimiter) {
  std::vector<std::string> out;
  if (delimiter.empty()) {
    out.emplace_back(s);
    return out;
  }
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(delimiter, pos);
    if (next == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      return out;
    }
    out.emplace_back(s.substr(pos, next - pos));
    pos = next + delimiter.size();
  }
}

std::vector<std::string> trigram_set(std::string_view s) {
  std::vector<std::string> grams;
  if (s.empty()) return grams;
  if (s.size() < 3) {
    grams.emplace_back(s);
    return grams;
  }
  grams.reserve(s.size() - 2);
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) grams.emplace_back(s.substr(i, 3));
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

std::string snake_case(std::string_view label) {
  std::string out;
  for (char ch : to_lower(label)) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      out.push_back(ch);
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string sanitize_cell(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\t' || c == '\n' || c == '\r') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return std::string(trim(out));
}

}  // namespace defner::text
