// Copyright 2026 The Calkit Authors.
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

#ifndef CALKIT_ERROR_H_
#define CALKIT_ERROR_H_

#include <stdexcept>
#include <string>

namespace calkit {

enum class ErrorCode {
  kInvalidVector,
  kAllZeroScores,
  kNonFiniteScore,
  kOutOfRange,
  kSchemaError,
  kSimplexViolation,
  kLabelOutOfRange,
  kDuplicateId,
  kEmptyDataset,
  kEmptyInput,
  kNonFiniteInput,
  kUnknownSupportPoint,
  kBadParams,
  kUnreachableAccuracy,
  kNoDisagreement,
  kDegenerateTail,
  kBadQ,
  kNegativeBeta,
  kNonFiniteLoss,
  kNonFiniteGradient,
  kDimensionMismatch,
  kBadTemperature,
  kBadEpsilon,
  kIoError,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace calkit

#endif  // CALKIT_ERROR_H_
