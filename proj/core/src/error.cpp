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

#include "defner/error.hpp"

namespace defner {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::kUnknownLabel: return "UNKNOWN_LABEL";
    case ErrorCode::kDuplicateId: return "DUPLICATE_ID";
    case ErrorCode::kMalformedRow: return "MALFORMED_ROW";
    case ErrorCode::kDuplicateCui: return "DUPLICATE_CUI";
    case ErrorCode::kMissingDescriptions: return "MISSING_DESCRIPTIONS";
    case ErrorCode::kUnsupportedFormat: return "UNSUPPORTED_FORMAT";
    case ErrorCode::kPoolTooSmall: return "POOL_TOO_SMALL";
    case ErrorCode::kTransportFailure: return "TRANSPORT_FAILURE";
    case ErrorCode::kAuthFailure: return "AUTH_FAILURE";
    case ErrorCode::kReplayMiss: return "REPLAY_MISS";
    case ErrorCode::kScriptExhausted: return "SCRIPT_EXHAUSTED";
    case ErrorCode::kUnalignedIds: return "UNALIGNED_IDS";
    case ErrorCode::kDonorRequired: return "DONOR_REQUIRED";
    case ErrorCode::kEmptyDonorPool: return "EMPTY_DONOR_POOL";
    case ErrorCode::kEmptySource: return "EMPTY_SOURCE";
    case ErrorCode::kConfig: return "CONFIG";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace defner
