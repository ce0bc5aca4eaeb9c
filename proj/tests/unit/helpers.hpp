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

#ifndef DEFNER_TESTS_HELPERS_HPP_
#define DEFNER_TESTS_HELPERS_HPP_

#include <filesystem>
#include <string>

#include "defner/corpus.hpp"
#include "defner/error.hpp"
#include "doctest.h"

namespace defner::testing {

inline std::filesystem::path fixtures() { return DEFNER_FIXTURES_DIR; }

inline DatasetSchema two_type_schema() {
  DatasetSchema s;
  s.name = "two";
  s.labels = {{"Chemicals", "Drugs and compounds."}, {"Diseases", "Disorders."}};
  return s;
}

inline DatasetSchema one_type_schema() {
  DatasetSchema s;
  s.name = "one";
  s.labels = {{"Diseases", "Disorders."}};
  return s;
}

inline GoldInstance gold(std::string id, std::string text, std::vector<TypedEntity> entities) {
  return GoldInstance{Document{std::move(id), std::move(text)}, std::move(entities)};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("defner-unit-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace defner::testing

#define CHECK_THROWS_CODE(expr, error_code)                                   \
  do {                                                                        \
    bool defner_thrown_ = false;                                              \
    try {                                                                     \
      (void)(expr);                                                           \
    } catch (const ::defner::Error& defner_e_) {                              \
      defner_thrown_ = true;                                                  \
      CHECK_MESSAGE(defner_e_.code() == (error_code), defner_e_.what());      \
    }                                                                         \
    CHECK_MESSAGE(defner_thrown_, "expected defner::Error from " #expr);      \
  } while (false)

#endif  // DEFNER_TESTS_HELPERS_HPP_
