// Copyright 2026 The blurbt Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blurbt {

enum class ErrorCode {
  kUnreadable,
  kUnsupportedFormat,
  kZeroDimension,
  kKernelTooLarge,
  kInvalidKernel,
  kInvalidArgument,
  kParseError,
  kDanglingAnnotation,
  kDuplicateId,
  kBoxOutOfBounds,
  kMissingScore,
  kUnknownImage,
  kUnknownCategory,
  kDetectorFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnreadable: return "unreadable";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kZeroDimension: return "zero_dimension";
    case ErrorCode::kKernelTooLarge: return "kernel_too_large";
    case ErrorCode::kInvalidKernel: return "invalid_kernel";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kDanglingAnnotation: return "dangling_annotation";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kBoxOutOfBounds: return "box_out_of_bounds";
    case ErrorCode::kMissingScore: return "missing_score";
    case ErrorCode::kUnknownImage: return "unknown_image";
    case ErrorCode::kUnknownCategory: return "unknown_category";
    case ErrorCode::kDetectorFailure: return "detector_failure";
  }
  return "unknown";
}

// All library failures are reported as Error; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blurbt
