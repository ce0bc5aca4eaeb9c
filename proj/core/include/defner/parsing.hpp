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

// Completion parsers for the JSON, code and linearized output formats. None
// of them evaluates completion content.

#ifndef DEFNER_PARSING_HPP_
#define DEFNER_PARSING_HPP_

#include <string_view>

#include "defner/corpus.hpp"
#include "defner/extraction.hpp"
#include "defner/prompting.hpp"

namespace defner {

// Strict parse first; otherwise repairs are applied cumulatively in order:
// fence/prose strip, trailing-comma removal, single-to-double quotes. The
// first success after a repair is REPAIRED; nothing parses -> FAILED.
ExtractionSet parse_json_output(std::string_view completion, const DatasetSchema& schema);

// Lines of the form  label_snake = [ "a", 'b' ]  (lists may span lines).
// FAILED when no assignment names a schema label.
ExtractionSet parse_code_output(std::string_view completion, const DatasetSchema& schema);

// Single-type: "a <sep> b". Multi-type: "[a:T1, b:T2]". Malformed items are
// skipped and logged as MALFORMED_ITEM.
ExtractionSet parse_linearized(std::string_view completion, const DatasetSchema& schema);

ExtractionSet parse_output(std::string_view completion, const DatasetSchema& schema, OutputFormat out_fmt);

// Same grammar as the first turn.
ExtractionSet parse_followup(std::string_view completion, const DatasetSchema& schema, OutputFormat out_fmt);

// The set a conversation holds after a follow-up: the follow-up's set
// replaces the previous one unless the follow-up failed to parse.
const ExtractionSet& resolve_followup(const ExtractionSet& previous, const ExtractionSet& followup);

}  // namespace defner

#endif  // DEFNER_PARSING_HPP_
