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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace til {

/// The twelve TCGA cohorts covered by the classifier. UVM is deliberately
/// absent.
enum class CancerType : std::uint8_t {
  BLCA,
  BRCA,
  CESC,
  COAD,
  LUAD,
  LUSC,
  PAAD,
  PRAD,
  READ,
  SKCM,
  STAD,
  UCEC,
};

inline constexpr std::array<CancerType, 12> kAllCancerTypes = {
    CancerType::BLCA, CancerType::BRCA, CancerType::CESC, CancerType::COAD,
    CancerType::LUAD, CancerType::LUSC, CancerType::PAAD, CancerType::PRAD,
    CancerType::READ, CancerType::SKCM, CancerType::STAD, CancerType::UCEC,
};

std::string_view to_string(CancerType type);
/// Throws kInvalidArgument for unknown codes (including UVM).
CancerType parse_cancer_type(std::string_view code);

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1 };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

enum class Source : std::uint8_t { kManual, kSemiAuto };

std::string_view to_string(Source source);
Source parse_source(std::string_view text);

enum class Split : std::uint8_t { kTrain, kValidation, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// Single decision rule used everywhere: a score at or above the threshold
/// is TIL positive.
constexpr bool is_positive(double score, double threshold) noexcept {
  return score >= threshold;
}

}  // namespace til
