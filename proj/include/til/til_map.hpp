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
#include <string>
#include <variant>
#include <vector>

#include "til/image.hpp"

namespace til {

/// Per-patch TIL probabilities over a slide's tile grid, row-major
/// (index = y * n_cols + x).
struct TilMap {
  std::string slide_id;
  int patch_px = 100;
  int n_cols = 0;
  int n_rows = 0;
  std::vector<double> probs;
  /// 1 where the cell was skipped by the tissue filter (its prob is 0.0).
  /// Empty means nothing was filtered.
  std::vector<std::uint8_t> mask;
  std::string model_id;
  std::string created_at;

  std::size_t n_cells() const {
    return static_cast<std::size_t>(n_cols) * static_cast<std::size_t>(n_rows);
  }
  double at(int x, int y) const {
    return probs[static_cast<std::size_t>(y) * n_cols + x];
  }
  bool masked(std::size_t index) const {
    return !mask.empty() && mask[index] != 0;
  }

  /// kGeometryMismatch / kValueOutOfRange when invariants fail.
  void validate() const;
};

struct BinaryTilMap {
  std::string slide_id;
  int patch_px = 100;
  int n_cols = 0;
  int n_rows = 0;
  std::vector<std::uint8_t> cells;
  double threshold = 0.5;
  std::string source_map_id;
  std::string model_id;
  std::string created_at;

  std::size_t n_cells() const {
    return static_cast<std::size_t>(n_cols) * static_cast<std::size_t>(n_rows);
  }
  void validate() const;
};

using AnyTilMap = std::variant<TilMap, BinaryTilMap>;

/// cells = probs >= t. kValueOutOfRange for t outside [0, 1].
BinaryTilMap binarize(const TilMap& map, double t, std::string source_map_id = {});

/// Current UTC time as ISO-8601.
std::string utc_timestamp();

/// Map file: one JSON header line, then n_rows lines of n_cols
/// tab-separated values (shortest round-trip decimal for probabilities, 0/1
/// for binary maps).
void write_map(const TilMap& map, const std::filesystem::path& path);
void write_map(const BinaryTilMap& map, const std::filesystem::path& path);
AnyTilMap read_map(const std::filesystem::path& path);
/// Like read_map but requires a probability map.
TilMap read_prob_map(const std::filesystem::path& path);

struct GrayscaleImportMeta {
  std::string slide_id;
  int patch_px = 100;
  std::string model_id = "grayscale-import";
  /// Plane to use for multi-channel images (R,G,B,A order); -1 = require a
  /// single-channel image.
  int channel = -1;
};

/// One pixel per cell, probability = value / 255.
TilMap import_grayscale_map(const std::filesystem::path& image_path,
                            const GrayscaleImportMeta& meta);
TilMap import_grayscale_map(const GrayImage& image,
                            const GrayscaleImportMeta& meta);

}  // namespace til
