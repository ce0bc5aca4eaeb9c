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

#ifndef DEFNER_ERROR_HPP_
#define DEFNER_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace defner {

enum class ErrorCode {
  kMalformedRecord,
  kUnknownLabel,
  kDuplicateId,
  kMalformedRow,
  kDuplicateCui,
  kMissingDescriptions,
  kUnsupportedFormat,
  kPoolTooSmall,
  kTransportFailure,
  kAuthFailure,
  kReplayMiss,
  kScriptExhausted,
  kUnalignedIds,
  kDonorRequired,
  kEmptyDonorPool,
  kEmptySource,
  kConfig,
  kIo,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace defner

#endif  // DEFNER_ERROR_HPP_
