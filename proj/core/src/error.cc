// Copyright 2026 The convfeat Authors.
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

#include "convfeat/error.h"

namespace convfeat {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kStateMissing: return "StateMissing";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kShapeChainError: return "ShapeChainError";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMissingLayer: return "MissingLayer";
    case ErrorCode::kDegenerateImage: return "DegenerateImage";
    case ErrorCode::kUnknownTap: return "UnknownTap";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kInsufficientClassSize: return "InsufficientClassSize";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kLabelDictMismatch: return "LabelDictMismatch";
    case ErrorCode::kPerplexityInfeasible: return "PerplexityInfeasible";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ExitCategory CategoryOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kNonFinite:
    case ErrorCode::kStateMissing:
    case ErrorCode::kDivergence:
    case ErrorCode::kDegenerateInput:
      return ExitCategory::kEngine;
    case ErrorCode::kSingleClass:
    case ErrorCode::kEmptyClass:
    case ErrorCode::kInsufficientClassSize:
    case ErrorCode::kEmptyGrid:
    case ErrorCode::kPerplexityInfeasible:
      return ExitCategory::kProtocol;
    default:
      return ExitCategory::kInput;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace convfeat
