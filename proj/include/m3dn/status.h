/*
 * Copyright 2026 The M3DN Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef M3DN_STATUS_H_
#define M3DN_STATUS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace m3dn {

// Failure categories raised across the library. Every thrown m3dn::Error
// carries exactly one of these.
enum class ErrorCode {
  kAllZero,
  kNotNormalized,
  kNegativeEntry,
  kDimensionMismatch,
  kNumericalUnderflow,
  kDegenerateBasis,
  kInvalidArgument,
  kNotPsd,
  kSingularReference,
  kNonPositiveDefiniteArgument,
  kSingularSystem,
  kEigenFailure,
  kEmptyLabelSet,
  kNonFiniteActivation,
  kNoDecoder,
  kStaleCache,
  kNoLabeledData,
  kNonFiniteObjective,
  kNoInput,
  kEmptyInput,
  kUndefined,
  kInvalidConfig,
  kInsufficientData,
  kParseError,
  kSchemaVersionMismatch,
  kDimensionInconsistency,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  // The message without the error-code prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Throws Error(code, message) when `condition` is false.
inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace m3dn

#endif  // M3DN_STATUS_H_
