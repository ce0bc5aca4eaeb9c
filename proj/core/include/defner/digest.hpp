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

#ifndef DEFNER_DIGEST_HPP_
#define DEFNER_DIGEST_HPP_

#include <string>
#include <string_view>

namespace defner {

// Lowercase hex SHA-256 of the bytes of s.
std::string sha256_hex(std::string_view s);

}  // namespace defner

#endif  // DEFNER_DIGEST_HPP_
