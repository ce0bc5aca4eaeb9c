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

// A deterministic stand-in for a chat model. It knows the gold annotations of
// the documents it is asked about and answers the first pass with seeded
// noise (misses, wrong types, truncated spans, spurious mentions). Follow-ups
// correct the terms they name, more reliably when a definition is attached.

#ifndef DEFNER_TESTS_SIM_BACKEND_HPP_
#define DEFNER_TESTS_SIM_BACKEND_HPP_

#include <map>
#include <string>
#include <vector>

#include "defner/corpus.hpp"
#include "defner/llm_gateway.hpp"

namespace defner::testing {

struct SimProfile {
  int miss_pct = 18;
  int mislabel_pct = 10;
  int truncate_pct = 8;
  int spurious_pct = 35;
  int fix_with_def_pct = 85;
  int fix_bare_pct = 35;
};

class SimBackend final : public Backend {
 public:
  SimBackend(const std::vector<Dataset>& corpora, std::vector<std::string> distractors, SimProfile profile = {});

  ChatResponse complete(const ChatRequest& request) override;
  std::string tag() const override { return "simulated"; }

  static std::vector<std::string> default_distractors();

 private:
  std::map<std::string, std::vector<TypedEntity>> gold_by_text_;
  std::vector<std::string> distractors_;
  SimProfile profile_;
};

}  // namespace defner::testing

#endif  // DEFNER_TESTS_SIM_BACKEND_HPP_
