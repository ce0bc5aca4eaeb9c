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
#include "defner/prompting.hpp"
#include "helpers.hpp"

using namespace defner;

namespace {

std::vector<TypedEntity> sorted(std::vector<TypedEntity> v) {
  std::sort(v.begin(), v.end());
  return v;
}

bool has_log(const ExtractionSet& s, const std::string& needle) {
  return std::any_of(s.log.begin(), s.log.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("clean json") {
  const auto s = parse_json_output(R"({"Chemicals": ["aspirin"], "Diseases": ["pain", "fever"]})",
                                   testing::two_type_schema());
  CHECK(s.status == ParseStatus::kClean);
  CHECK(sorted(s.entities) ==
        sorted({{"aspirin", "Chemicals"}, {"pain", "Diseases"}, {"fever", "Diseases"}}));
}

TEST_CASE("json repair steps") {
  const auto schema = testing::two_type_schema();
  const auto fenced = parse_json_output("Sure! Here it is:\n```json\n{\"Chemicals\": [\"a\"], \"Diseases\": []}\n```\nDone.", schema);
  CHECK(fenced.status == ParseStatus::kRepaired);
  CHECK(has_log(fenced, "repair:"));
  CHECK(fenced.entities == std::vector<TypedEntity>{{"a", "Chemicals"}});

  const auto trailing = parse_json_output("{\"Chemicals\": [\"a\", \"b,]\",], \"Diseases\": [],}", schema);
  CHECK(trailing.status == ParseStatus::kRepaired);
  CHECK(sorted(trailing.entities) == sorted({{"a", "Chemicals"}, {"b,]", "Chemicals"}}));

  const auto single = parse_json_output("{'Chemicals': ['Parkinson's drug'], 'Diseases': ['x']}", schema);
  CHECK(single.status == ParseStatus::kRepaired);
  CHECK(sorted(single.entities) == sorted({{"Parkinson's drug", "Chemicals"}, {"x", "Diseases"}}));

  const auto none = parse_json_output("I could not find any entities.", schema);
  CHECK(none.status == ParseStatus::kFailed);
  CHECK(none.entities.empty());
}

TEST_CASE("json key and value normalization") {
  const auto schema = testing::two_type_schema();
  const auto s = parse_json_output(R"({"chemicals": "aspirin", "Genes": ["BRCA1"], "Diseases": [3, "", "pain"]})", schema);
  CHECK(s.status == ParseStatus::kClean);
  CHECK(sorted(s.entities) == sorted({{"aspirin", "Chemicals"}, {"3", "Diseases"}, {"pain", "Diseases"}}));
  CHECK(has_log(s, "Genes"));
  const auto arr = parse_json_output(R"(["a", "b"])", testing::one_type_schema());
  CHECK(arr.entities.size() == 2);
  CHECK(parse_json_output(R"(["a"])", schema).status == ParseStatus::kFailed);
}

TEST_CASE("code output") {
  const auto schema = testing::two_type_schema();
  const auto s = parse_code_output("```python\nchemicals = ['aspirin', \"it's\"]\ndiseases = [\n  'pain',\n  None,\n]\n```",
                                   schema);
  CHECK(s.status != ParseStatus::kFailed);
  CHECK(sorted(s.entities) == sorted({{"aspirin", "Chemicals"}, {"it's", "Chemicals"}, {"pain", "Diseases"}}));
  CHECK(parse_code_output("no code here", schema).status == ParseStatus::kFailed);
  const auto open = parse_code_output("chemicals = ['a', 'b'", schema);
  CHECK(open.status == ParseStatus::kFailed);
  CHECK(has_log(open, "unterminated"));
}

TEST_CASE("linearized output") {
  const auto multi = testing::two_type_schema();
  const auto s = parse_linearized("[a:Chemicals, b, c:Diseases, d:Genes]", multi);
  CHECK(sorted(s.entities) == sorted({{"a", "Chemicals"}, {"b, c", "Diseases"}}));
  CHECK(has_log(s, "MALFORMED_ITEM"));
  const auto single = parse_linearized("x <sep> y", testing::one_type_schema());
  CHECK(single.entities.size() == 2);
  const auto empty = parse_linearized("", multi);
  CHECK(empty.status == ParseStatus::kClean);
  CHECK(empty.entities.empty());
}

TEST_CASE("render then parse is the identity for every format") {
  const auto schema = testing::two_type_schema();
  const auto g = testing::gold("g", "t", {{"a \"quoted\" term", "Chemicals"}, {"b", "Diseases"}, {"c", "Diseases"}});
  for (auto fmt : {OutputFormat::kJson, OutputFormat::kCode, OutputFormat::kLinearized}) {
    const auto s = parse_output(render_target(g, fmt, schema), schema, fmt);
    CHECK(sorted(s.entities) == sorted(g.entities));
  }
}

TEST_CASE("followup resolution keeps the previous set on failure") {
  const auto schema = testing::two_type_schema();
  const auto prev = parse_json_output(R"({"Chemicals": ["a"], "Diseases": []})", schema);
  const auto bad = parse_followup("garbage", schema, OutputFormat::kJson);
  CHECK(&resolve_followup(prev, bad) == &prev);
  const auto good = parse_followup(R"({"Chemicals": [], "Diseases": ["b"]})", schema, OutputFormat::kJson);
  CHECK(&resolve_followup(prev, good) == &good);
}
