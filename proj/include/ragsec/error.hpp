//
// Copyright 2026 The ragsec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef RAGSEC_ERROR_HPP_
#define RAGSEC_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragsec {

enum class ErrorCode {
  kMalformedLine,
  kDuplicateId,
  kEmptyCorpus,
  kUnknownId,
  kInvalidSpan,
  kDimensionMismatch,
  kInvalidK,
  kInvalidDpParams,
  kUniverseTooSmall,
  kNotInformed,
  kEmptyAnchor,
  kInvalidTau,
  kEmptyTriggerSet,
  kEmptyVocab,
  kPoolTooSmall,
  kEmptyTranscripts,
  kTooFewTrials,
  kMismatchedTrials,
  kInvalidArgument,
  kIo,
  kConfig,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kInvalidSpan: return "InvalidSpan";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kInvalidDpParams: return "InvalidDpParams";
    case ErrorCode::kUniverseTooSmall: return "UniverseTooSmall";
    case ErrorCode::kNotInformed: return "NotInformed";
    case ErrorCode::kEmptyAnchor: return "EmptyAnchor";
    case ErrorCode::kInvalidTau: return "InvalidTau";
    case ErrorCode::kEmptyTriggerSet: return "EmptyTriggerSet";
    case ErrorCode::kEmptyVocab: return "EmptyVocab";
    case ErrorCode::kPoolTooSmall: return "PoolTooSmall";
    case ErrorCode::kEmptyTranscripts: return "EmptyTranscripts";
    case ErrorCode::kTooFewTrials: return "TooFewTrials";
    case ErrorCode::kMismatchedTrials: return "MismatchedTrials";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

// Every failure raised by the library. `detail()` carries the offending
// id, line number or field name without the code prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail)
      : std::runtime_error(std::string(ErrorCodeName(code)) + "(" + detail +
                           ")"),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ragsec

#endif  // RAGSEC_ERROR_HPP_
