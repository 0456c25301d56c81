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

#include "m3dn/status.h"

namespace m3dn {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAllZero: return "AllZero";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::kDegenerateBasis: return "DegenerateBasis";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotPsd: return "NotPSD";
    case ErrorCode::kSingularReference: return "SingularReference";
    case ErrorCode::kNonPositiveDefiniteArgument:
      return "NonPositiveDefiniteArgument";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kEigenFailure: return "EigenFailure";
    case ErrorCode::kEmptyLabelSet: return "EmptyLabelSet";
    case ErrorCode::kNonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::kNoDecoder: return "NoDecoder";
    case ErrorCode::kStaleCache: return "StaleCache";
    case ErrorCode::kNoLabeledData: return "NoLabeledData";
    case ErrorCode::kNonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::kNoInput: return "NoInput";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUndefined: return "Undefined";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kDimensionInconsistency: return "DimensionInconsistency";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace m3dn
