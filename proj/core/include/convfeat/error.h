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

#ifndef CONVFEAT_ERROR_H_
#define CONVFEAT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace convfeat {

// Every failure the library reports carries one of these codes. The CLI maps
// them onto process exit codes (see ExitCategory).
enum class ErrorCode {
  kDimensionMismatch,
  kNonFinite,
  kStateMissing,
  kParseError,
  kShapeChainError,
  kDuplicateName,
  kFormatError,
  kShapeMismatch,
  kMissingLayer,
  kDegenerateImage,
  kUnknownTap,
  kDivergence,
  kSingleClass,
  kEmptyClass,
  kInsufficientClassSize,
  kEmptyGrid,
  kLabelDictMismatch,
  kPerplexityInfeasible,
  kDegenerateInput,
  kIoError,
  kInvalidArgument,
};

std::string_view ErrorCodeName(ErrorCode code);

enum class ExitCategory { kInput = 2, kEngine = 3, kProtocol = 4 };

ExitCategory CategoryOf(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace convfeat

#endif  // CONVFEAT_ERROR_H_
