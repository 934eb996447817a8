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

#include <filesystem>
#include <memory>
#include <string>

#include "til/image.hpp"
#include "til/types.hpp"

namespace til {

/// Narrow read interface over slide pixels. Implementations must be safe for
/// concurrent `read_region` calls.
class PixelSource {
 public:
  virtual ~PixelSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  /// Returns the w x h RGB block at (x, y) in level-0 (20X) coordinates.
  virtual RgbImage read_region(int x, int y, int w, int h) const = 0;
};

/// Whole image held in memory; the synthetic stand-in for a slide.
class InMemoryPixelSource final : public PixelSource {
 public:
  explicit InMemoryPixelSource(RgbImage image) : image_(std::move(image)) {}
  int width() const override { return image_.width; }
  int height() const override { return image_.height; }
  RgbImage read_region(int x, int y, int w, int h) const override;
  const RgbImage& image() const { return image_; }

 private:
  RgbImage image_;
};

/// Opens any single-level raster OpenCV can decode. The file is decoded once
/// at open time.
std::shared_ptr<const PixelSource> open_image_source(
    const std::filesystem::path& path);

struct SlideRef {
  std::string slide_id;
  std::string patient_id;
  CancerType cancer_type = CancerType::LUAD;
  int width_px = 0;
  int height_px = 0;
  double magnification = 20.0;
  double microns_per_pixel = 0.5;
  std::string pixel_source;  // path or URI; informational once opened
  std::shared_ptr<const PixelSource> pixels;
};

/// Builds a SlideRef around an in-memory image.
SlideRef make_slide(std::string slide_id, RgbImage image,
                    std::string patient_id = {},
                    CancerType cancer_type = CancerType::LUAD);

/// Loads a slide from an image file, or from a JSON descriptor with
/// slide_id/patient_id/cancer_type/magnification/microns_per_pixel/
/// pixel_source fields (pixel_source resolved relative to the descriptor).
SlideRef load_slide(const std::filesystem::path& path);

struct Origin {
  int x = 0;
  int y = 0;
  bool operator==(const Origin&) const = default;
};

struct TileGrid {
  std::string slide_id;
  int patch_px = 100;
  int n_cols = 0;
  int n_rows = 0;
  Origin origin;
  double microns_per_pixel = 0.5;

  long long n_cells() const { return static_cast<long long>(n_cols) * n_rows; }
  bool operator==(const TileGrid&) const = default;
};

struct PatchImage {
  int grid_x = 0;
  int grid_y = 0;
  RgbImage pixels;  // patch_px x patch_px

  int patch_px() const { return pixels.width; }
};

/// Non-overlapping grid; trailing partial rows/columns are discarded.
/// kInvalidArgument for patch_px <= 0 or an origin outside the slide,
/// kEmptyGrid when not even one patch fits.
TileGrid build_grid(const SlideRef& slide, int patch_px, Origin origin = {});

/// kOutOfBounds, kUnreadableSource (no pixels attached / source smaller than
/// the grid claims), kNonRgbSource are distinct failure modes.
PatchImage extract_patch(const SlideRef& slide, const TileGrid& grid,
                         int grid_x, int grid_y);

struct TissueFilterParams {
  int background_intensity = 220;
  double min_tissue_fraction = 0.25;
};

/// A pixel is background when min(R,G,B) >= background_intensity. The patch
/// passes when the non-background fraction is >= min_tissue_fraction.
bool tissue_filter(const PatchImage& patch, const TissueFilterParams& params = {});

}  // namespace til
