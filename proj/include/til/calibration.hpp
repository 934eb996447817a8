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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace til {

/// Scores paired with binary ground truth (0 = negative, 1 = positive).
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double tpr = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
};

/// Points ordered by strictly increasing threshold.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.5;
};

enum class ThresholdMethod {
  kEqualError,  // argmin |FPR - FNR|
  kYoudenJ,     // argmax TPR - FPR
};

std::string_view to_string(ThresholdMethod method);
ThresholdMethod parse_threshold_method(std::string_view text);

struct CalibrationResult {
  double chosen_threshold = 0.5;
  /// |FPR - FNR| for kEqualError, TPR - FPR for kYoudenJ.
  double criterion_value = 0.0;
  ThresholdMethod method = ThresholdMethod::kEqualError;
  RocCurve roc;
  std::string validation_manifest_name;
};

/// Candidate thresholds: 0.0, every distinct score, 1.0 (deduplicated,
/// ascending).
std::vector<double> candidate_thresholds(std::span<const double> scores);

/// Probability that a random positive outscores a random negative, ties
/// counting one half, via the Mann-Whitney rank sum. kSingleClass when
/// either class is missing.
double auc_rank(const ScoredSet& set);

RocCurve roc_curve(const ScoredSet& set);

/// Threshold selection over the ROC candidates. Ties resolve to the smallest
/// threshold.
CalibrationResult youden_threshold(
    const ScoredSet& set, ThresholdMethod method = ThresholdMethod::kEqualError);

/// Per-score positive decision (score >= t). kValueOutOfRange for t outside
/// [0, 1].
std::vector<std::uint8_t> apply_threshold(std::span<const double> scores,
                                          double t);

/// Reads "score,label" CSV (optional header line).
ScoredSet read_scores_csv(const std::string& path);

}  // namespace til
