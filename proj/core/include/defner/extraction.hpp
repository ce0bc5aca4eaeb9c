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

#ifndef DEFNER_EXTRACTION_HPP_
#define DEFNER_EXTRACTION_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "defner/corpus.hpp"

namespace defner {

enum class ParseStatus { kClean, kRepaired, kFailed };

std::string_view to_string(ParseStatus status);
ParseStatus parse_status_from_string(std::string_view s);

// A model's (or the linker's) prediction for one passage.
//   kFailed   => entities is empty
//   kRepaired => log holds at least one "repair:" step
struct ExtractionSet {
  std::vector<TypedEntity> entities;
  ParseStatus status = ParseStatus::kClean;
  std::vector<std::string> log;

  static ExtractionSet failed(std::string reason);
};

}  // namespace defner

#endif  // DEFNER_EXTRACTION_HPP_
