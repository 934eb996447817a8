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
#include <random>
#include <string>
#include <vector>

#include "til/annotation.hpp"
#include "til/image.hpp"
#include "til/wsi_tiling.hpp"

namespace til::synth {

/// Paints one cell at (x0, y0): mottled pink stroma, plus dense dark-purple
/// round nuclei when `positive`, or a few pale large nuclei otherwise.
void paint_cell(RgbImage& image, int x0, int y0, int px, bool positive,
                std::mt19937_64& rng);

RgbImage make_patch(int px, bool positive, std::uint64_t seed);

struct SyntheticSlide {
  SlideRef slide;
  int patch_px = 100;
  int n_cols = 0;
  int n_rows = 0;
  std::vector<std::uint8_t> truth;  // row-major, 1 = TIL positive cell
};

/// Slide whose cell (x, y) is positive iff truth[y * n_cols + x].
SyntheticSlide make_slide(std::string slide_id, int n_cols, int n_rows,
                          int patch_px, std::vector<std::uint8_t> truth,
                          std::uint64_t seed, std::string patient_id = {},
                          CancerType cancer_type = CancerType::LUAD);

/// Each cell positive independently with probability positive_fraction.
SyntheticSlide make_random_slide(std::string slide_id, int n_cols, int n_rows,
                                 int patch_px, double positive_fraction,
                                 std::uint64_t seed, std::string patient_id = {},
                                 CancerType cancer_type = CancerType::LUAD);

/// Manual ground-truth records for every cell of the slide.
std::vector<PatchRecord> truth_records(const SyntheticSlide& slide);

struct SyntheticRegion {
  RgbImage image;                   // 800 x 800
  std::vector<std::uint8_t> truth;  // 64 cells, row-major
};

/// Region with exactly n_positive positive 100 px cells at seeded positions.
SyntheticRegion make_region(int n_positive, std::uint64_t seed);

}  // namespace til::synth
