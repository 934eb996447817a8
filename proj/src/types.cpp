// Copyright 2026 The tilharvest Authors. All Rights Reserved.
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

#include "til/types.hpp"

#include "til/error.hpp"

namespace til {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyGrid: return "empty_grid";
    case ErrorCode::kOutOfBounds: return "out_of_bounds";
    case ErrorCode::kUnreadableSource: return "unreadable_source";
    case ErrorCode::kNonRgbSource: return "non_rgb_source";
    case ErrorCode::kMalformedFile: return "malformed_file";
    case ErrorCode::kGeometryMismatch: return "geometry_mismatch";
    case ErrorCode::kValueOutOfRange: return "value_out_of_range";
    case ErrorCode::kSingleClass: return "single_class";
    case ErrorCode::kDuplicateRecord: return "duplicate_record";
    case ErrorCode::kUncoveredCancerType: return "uncovered_cancer_type";
    case ErrorCode::kNonFiniteLoss: return "non_finite_loss";
    case ErrorCode::kModelMismatch: return "model_mismatch";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kIoError: return "io_error";
  }
  return "unknown";
}

namespace {
constexpr std::array<std::string_view, 12> kCancerCodes = {
    "BLCA", "BRCA", "CESC", "COAD", "LUAD", "LUSC",
    "PAAD", "PRAD", "READ", "SKCM", "STAD", "UCEC",
};
}  // namespace

std::string_view to_string(CancerType type) {
  return kCancerCodes[static_cast<std::size_t>(type)];
}

CancerType parse_cancer_type(std::string_view code) {
  for (std::size_t i = 0; i < kCancerCodes.size(); ++i) {
    if (kCancerCodes[i] == code) return static_cast<CancerType>(i);
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown cancer type '" + std::string(code) + "'");
}

std::string_view to_string(Label label) {
  return label == Label::kPositive ? "TIL_POSITIVE" : "TIL_NEGATIVE";
}

Label parse_label(std::string_view text) {
  if (text == "TIL_POSITIVE") return Label::kPositive;
  if (text == "TIL_NEGATIVE") return Label::kNegative;
  fail(ErrorCode::kInvalidArgument, "unknown label '" + std::string(text) + "'");
}

std::string_view to_string(Source source) {
  return source == Source::kManual ? "MANUAL" : "SEMI_AUTO";
}

Source parse_source(std::string_view text) {
  if (text == "MANUAL") return Source::kManual;
  if (text == "SEMI_AUTO") return Source::kSemiAuto;
  fail(ErrorCode::kInvalidArgument,
       "unknown annotation source '" + std::string(text) + "'");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "TRAIN";
    case Split::kValidation: return "VALIDATION";
    case Split::kTest: return "TEST";
  }
  return "TRAIN";
}

Split parse_split(std::string_view text) {
  if (text == "TRAIN") return Split::kTrain;
  if (text == "VALIDATION") return Split::kValidation;
  if (text == "TEST") return Split::kTest;
  fail(ErrorCode::kInvalidArgument, "unknown split '" + std::string(text) + "'");
}

}  // namespace til
