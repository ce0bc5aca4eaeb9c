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

#ifndef DEFNER_RNG_HPP_
#define DEFNER_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace defner {

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
uint64_t fnv1a64(std::string_view s);

// splitmix64 finalizer over the pair.
uint64_t mix_seed(uint64_t a, uint64_t b);

// Per-instance seed derived from a run seed and an instance id.
uint64_t instance_seed(uint64_t run_seed, std::string_view instance_id);

// std::mt19937_64 with portable index sampling. The standard distributions are
// implementation-defined, so sampled sequences would differ across standard
// libraries; everything here only uses raw engine output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices from [0, n) in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace defner

#endif  // DEFNER_RNG_HPP_
