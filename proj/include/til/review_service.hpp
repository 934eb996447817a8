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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "til/annotation.hpp"
#include "til/til_map.hpp"
#include "til/types.hpp"

namespace til {

/// Sidecar `<map_id>.meta.json` next to `<map_id>.tilmap`.
struct MapMeta {
  std::string patient_id;
  std::optional<CancerType> cancer_type;
  /// Slide image or slide descriptor; relative paths resolve against the
  /// store directory. Empty means no thumbnails.
  std::string pixel_source;
  std::string patch_uri_prefix;
};

struct MapSummary {
  std::string map_id;
  std::string slide_id;
  std::optional<CancerType> cancer_type;
  std::size_t n_cells = 0;
  std::string status;  // UNREVIEWED, IN_REVIEW, COMMITTED
};

/// Directory-backed, append-only store of probability maps.
class MapStore {
 public:
  explicit MapStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::vector<std::string> map_ids() const;
  bool contains(const std::string& map_id) const;
  /// kNotFound for unknown ids. Loaded maps are cached.
  std::shared_ptr<const TilMap> load(const std::string& map_id) const;
  MapMeta meta(const std::string& map_id) const;
  /// kConflict when the id already exists, kInvalidArgument for ids outside
  /// [A-Za-z0-9._-].
  void add(const std::string& map_id, const TilMap& map, const MapMeta& meta = {});

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const TilMap>> cache_;
};

struct MapPayload {
  std::string map_id;
  std::shared_ptr<const TilMap> map;
  int preview_cols = 0;
  int preview_rows = 0;
  int factor = 1;
  std::vector<double> preview;  // block means, row-major
  bool include_full = false;
};

struct ThresholdPreview {
  double threshold = 0.0;
  std::size_t positive_count = 0;
  std::size_t n_cells = 0;
  double positive_fraction = 0.0;
  int preview_cols = 0;
  int preview_rows = 0;
  std::vector<std::uint8_t> binary_preview;  // block majority of decisions
};

struct PatchSample {
  int grid_x = 0;
  int grid_y = 0;
  double prob = 0.0;
  std::vector<std::uint8_t> png;
};

struct PatchSamples {
  std::vector<PatchSample> positives;  // ascending prob - t
  std::vector<PatchSample> negatives;  // ascending t - prob
};

enum class SessionStatus { kOpen, kCommitted };
std::string_view to_string(SessionStatus status);

struct ReviewSession {
  std::string session_id;
  std::string map_id;
  double current_threshold = 0.5;
  SessionStatus status = SessionStatus::kOpen;
  std::optional<std::filesystem::path> committed_manifest;
};

struct CommitResult {
  ReviewSession session;
  std::size_t n_records = 0;
};

struct ReviewConfig {
  std::filesystem::path store_dir;
  /// Where committed manifests land; defaults to <store_dir>/manifests.
  std::filesystem::path manifest_dir;
  int preview_max = 200;
};

/// Block factor ceil(max(n_cols, n_rows) / preview_max), never below 1.
int preview_factor(int n_cols, int n_rows, int preview_max);

/// Mean over each factor x factor block (partial edge blocks average the
/// cells they cover).
std::vector<double> block_mean(std::span<const double> values, int n_cols,
                               int n_rows, int factor);

class ReviewService {
 public:
  explicit ReviewService(ReviewConfig config);

  const ReviewConfig& config() const { return config_; }
  MapStore& store() { return store_; }

  std::vector<MapSummary> list_maps() const;
  MapPayload get_map(const std::string& map_id, bool full = false) const;
  /// kValueOutOfRange for t outside [0, 1].
  ThresholdPreview preview_threshold(const std::string& map_id, double t) const;
  /// kUnavailable when the map has no slide pixels. Masked cells are never
  /// sampled; ties on distance break by row-major cell index.
  PatchSamples sample_patches(const std::string& map_id, double t, int n_per_side) const;

  ReviewSession create_session(const std::string& map_id);
  ReviewSession session(const std::string& session_id) const;
  /// Harvests the map at t (every cell when n_samples <= 0) into a manifest
  /// written through a temporary file and renamed into place. kConflict for
  /// a session already committed; on any failure the session stays OPEN
  /// and no manifest exists.
  CommitResult commit(const std::string& session_id, double t, long long n_samples,
                      std::uint64_t seed, HarvestMode mode = HarvestMode::kUniform);

  /// Called with the temporary manifest path just before the rename.
  /// Throwing from it simulates a crash in the middle of the commit.
  void set_commit_fault_hook(std::function<void(const std::filesystem::path&)> hook);

 private:
  struct SessionSlot {
    ReviewSession state;
    std::mutex commit_mu;
  };
  std::shared_ptr<SessionSlot> slot(const std::string& session_id) const;

  ReviewConfig config_;
  MapStore store_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::uint64_t next_session_ = 1;
  std::function<void(const std::filesystem::path&)> fault_hook_;
};

}  // namespace til
