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
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "til/til_map.hpp"
#include "til/types.hpp"

namespace til {

struct PatchRecord {
  std::string slide_id;
  std::string patient_id;
  CancerType cancer_type = CancerType::LUAD;
  int grid_x = 0;
  int grid_y = 0;
  Label label = Label::kNegative;
  Source source = Source::kManual;
  /// Present iff source == kSemiAuto.
  std::optional<double> origin_threshold;
  std::string patch_uri;

  using Key = std::tuple<std::string, int, int>;
  Key key() const { return {slide_id, grid_x, grid_y}; }

  bool operator==(const PatchRecord&) const = default;
};

struct AnnotationManifest {
  std::string name;
  Split split = Split::kTrain;
  std::vector<PatchRecord> records;

  /// Throws kDuplicateRecord on repeated (slide, x, y) and kInvalidArgument
  /// when the source/origin_threshold pairing is violated.
  void validate() const;
  std::set<std::string> patient_ids() const;
};

/// JSON-lines I/O. The first line is a manifest header
/// `{"manifest": {"name": ..., "split": ...}}`, then one record per line.
std::string to_jsonl(const AnnotationManifest& manifest);
void write_manifest(const AnnotationManifest& manifest,
                    const std::filesystem::path& path);
AnnotationManifest read_manifest(const std::filesystem::path& path);

/// Identity fields a TIL map alone does not carry.
struct SlideInfo {
  std::string patient_id;
  CancerType cancer_type = CancerType::LUAD;
  /// Prefix for patch URIs; records get
  /// `<prefix><slide_id>_<grid_x>_<grid_y>.png`.
  std::string patch_uri_prefix;
};

std::string patch_file_name(const std::string& slide_id, int grid_x, int grid_y);

enum class HarvestMode {
  kUniform,     // uniform without replacement over all cells
  kStratified,  // half positives, half negatives where available
};

/// Samples min(n_samples, n_cells) cells and labels each by
/// prob >= threshold. Records come out in row-major cell order.
/// `n_samples` <= 0 means every cell.
std::vector<PatchRecord> harvest_semi_auto(const TilMap& map,
                                           const SlideInfo& info,
                                           double threshold, long long n_samples,
                                           std::uint64_t rng_seed,
                                           HarvestMode mode = HarvestMode::kUniform);

struct MixturePolicy {
  std::set<CancerType> manual_types = {CancerType::BRCA, CancerType::COAD,
                                       CancerType::LUAD, CancerType::PAAD,
                                       CancerType::PRAD, CancerType::SKCM,
                                       CancerType::UCEC};
  std::set<CancerType> semi_types = {CancerType::CESC, CancerType::LUSC,
                                     CancerType::READ, CancerType::STAD};
  std::set<CancerType> excluded_types = {CancerType::BLCA};
  /// Optional cap on semi-automatic records kept per cancer type (first N in
  /// input order).
  std::map<CancerType, std::size_t> semi_caps;

  /// kInvalidArgument when the three sets overlap.
  void validate() const;
};

MixturePolicy read_policy(const std::filesystem::path& path);

struct MixtureOutcome {
  AnnotationManifest manifest;
  std::size_t manual_kept = 0;
  std::size_t semi_kept = 0;
  std::size_t semi_dropped_as_duplicate = 0;
};

/// Keeps manual records of manual_types and semi records of semi_types.
/// Cross-source duplicates resolve to the manual record.
MixtureOutcome assemble_mixture(const AnnotationManifest& manual,
                                const AnnotationManifest& semi,
                                const MixturePolicy& policy,
                                std::string name = "mix");

struct PatientSplit {
  AnnotationManifest train;
  AnnotationManifest test;
};

/// Shuffles distinct patients under the seed and moves
/// round(test_fraction * n_patients) of them (clamped to [1, n-1]) to test.
PatientSplit split_by_patient(const std::vector<AnnotationManifest>& manifests,
                              double test_fraction, std::uint64_t rng_seed);

struct ManifestStats {
  std::size_t total = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t manual = 0;
  std::size_t semi_auto = 0;
  std::map<CancerType, std::size_t> per_cancer_type;
  std::map<CancerType, std::pair<std::size_t, std::size_t>> per_type_labels;  // (pos, neg)
};

ManifestStats manifest_stats(const AnnotationManifest& manifest);

/// Cells chosen uniformly (under the seed) within each probability bin
/// [edges[i], edges[i+1]); the last bin is closed on the right.
std::vector<std::pair<int, int>> sample_by_probability_strata(
    const TilMap& map, const std::vector<double>& bin_edges,
    std::size_t per_bin, std::uint64_t rng_seed);

}  // namespace til
