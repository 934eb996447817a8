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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "til/annotation.hpp"
#include "til/model.hpp"

namespace til {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
};

struct PatchMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  /// Undefined (nullopt) when the denominators vanish; never reported as 0.
  std::optional<double> precision;
  std::optional<double> recall;
  /// F1 of the TIL-positive class; undefined when there are no predicted
  /// or true positives.
  std::optional<double> f1;
  /// Mean of positive- and negative-class F1, when requested and defined.
  std::optional<double> macro_f1;
};

/// kInvalidArgument for empty or length-mismatched inputs.
PatchMetrics patch_metrics(std::span<const std::uint8_t> predictions,
                           std::span<const std::uint8_t> truths,
                           bool with_macro_f1 = false);

struct MetricRow {
  std::size_t n = 0;
  PatchMetrics metrics;
  std::optional<double> auc;  // undefined for single-class subsets
};

struct ModelReport {
  std::string name;
  double threshold = 0.5;
  MetricRow overall;
  std::map<CancerType, MetricRow> per_cancer_type;
};

struct EvalReport {
  std::size_t n_test = 0;
  std::vector<ModelReport> models;
};

struct ModelScores {
  std::string name;
  std::vector<double> scores;  // aligned with the test manifest records
};

/// Core of the evaluation harness; works for any scorer, including imported
/// baseline maps. kInvalidArgument when a model has no threshold or a
/// threshold names no model, kGeometryMismatch when score and record counts
/// differ.
EvalReport evaluate_scores(const std::vector<ModelScores>& models,
                           const AnnotationManifest& test,
                           const std::map<std::string, double>& thresholds,
                           bool with_macro_f1 = false);

struct NamedModel {
  std::string name;
  const TrainedModel* model = nullptr;
};

EvalReport evaluate_models(const std::vector<NamedModel>& models,
                           const AnnotationManifest& test,
                           const std::map<std::string, double>& thresholds,
                           const PatchLoader& loader, bool with_macro_f1 = false);

std::string report_to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Region-level aggregation

enum class TilLevel : std::uint8_t { kLow = 0, kMedium = 1, kHigh = 2 };

std::string_view to_string(TilLevel level);
TilLevel parse_til_level(std::string_view text);

/// Rounded (half-up) mean of ordinal ratings LOW=0, MEDIUM=1, HIGH=2.
TilLevel rounded_average(std::span<const TilLevel> ratings);

inline constexpr int kRegionPx = 800;
inline constexpr int kRegionSubpatchPx = 100;
inline constexpr int kRegionCells = 64;

/// The 8 x 8 sub-patches of an 800 x 800 region, row-major.
/// kGeometryMismatch for any other region size.
std::vector<RgbImage> region_cells(const RgbImage& region);

/// Number of sub-patches scored >= t, in [0, 64].
int region_count(const TrainedModel& model, const RgbImage& region, double t);
int count_at_threshold(std::span<const double> scores, double t);

struct RegionRecord {
  std::string region_id;
  std::vector<TilLevel> expert_labels;
  TilLevel final_label = TilLevel::kLow;
  int predicted_count = 0;
};

RegionRecord make_region_record(std::string region_id,
                                std::vector<TilLevel> expert_labels,
                                int predicted_count);

struct Quantiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear interpolation between order statistics.
Quantiles quantiles(std::vector<double> values);

struct RegionDistribution {
  std::map<TilLevel, std::vector<int>> counts;  // ascending per class
  std::map<TilLevel, std::optional<Quantiles>> summary;
};

/// Every class appears in the result; empty classes have no summary.
RegionDistribution region_distribution(std::span<const RegionRecord> records);

/// `label,count` rows plus a sibling JSON with the quantile summary.
void write_distribution(const RegionDistribution& dist,
                        const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path);

}  // namespace til
