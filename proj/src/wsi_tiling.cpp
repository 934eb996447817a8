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

#include "til/wsi_tiling.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "til/error.hpp"

namespace til {

RgbImage InMemoryPixelSource::read_region(int x, int y, int w, int h) const {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > image_.width ||
      y + h > image_.height) {
    fail(ErrorCode::kUnreadableSource, "region outside the image");
  }
  return image_.crop(x, y, w, h);
}

std::shared_ptr<const PixelSource> open_image_source(
    const std::filesystem::path& path) {
  return std::make_shared<InMemoryPixelSource>(read_rgb(path));
}

SlideRef make_slide(std::string slide_id, RgbImage image,
                    std::string patient_id, CancerType cancer_type) {
  SlideRef slide;
  slide.slide_id = std::move(slide_id);
  slide.patient_id = patient_id.empty() ? slide.slide_id : std::move(patient_id);
  slide.cancer_type = cancer_type;
  slide.width_px = image.width;
  slide.height_px = image.height;
  slide.pixel_source = "memory:" + slide.slide_id;
  slide.pixels = std::make_shared<InMemoryPixelSource>(std::move(image));
  return slide;
}

SlideRef load_slide(const std::filesystem::path& path) {
  SlideRef slide;
  std::filesystem::path image_path = path;
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path.string());
    nlohmann::json j;
    try {
      in >> j;
      slide.slide_id = j.at("slide_id").get<std::string>();
      slide.patient_id = j.value("patient_id", slide.slide_id);
      slide.cancer_type =
          parse_cancer_type(j.value("cancer_type", std::string("LUAD")));
      slide.magnification = j.value("magnification", 20.0);
      slide.microns_per_pixel = j.value("microns_per_pixel", 0.5);
      image_path = j.at("pixel_source").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformedFile,
           "bad slide descriptor " + path.string() + ": " + e.what());
    }
    if (image_path.is_relative()) image_path = path.parent_path() / image_path;
  } else {
    slide.slide_id = path.stem().string();
    slide.patient_id = slide.slide_id;
  }
  slide.pixel_source = image_path.string();
  slide.pixels = open_image_source(image_path);
  slide.width_px = slide.pixels->width();
  slide.height_px = slide.pixels->height();
  return slide;
}

TileGrid build_grid(const SlideRef& slide, int patch_px, Origin origin) {
  if (patch_px <= 0) {
    fail(ErrorCode::kInvalidArgument, "patch_px must be positive");
  }
  if (slide.width_px <= 0 || slide.height_px <= 0) {
    fail(ErrorCode::kInvalidArgument, "slide dimensions must be positive");
  }
  if (origin.x < 0 || origin.y < 0 || origin.x >= slide.width_px ||
      origin.y >= slide.height_px) {
    fail(ErrorCode::kInvalidArgument, "origin offset outside the slide");
  }
  TileGrid grid;
  grid.slide_id = slide.slide_id;
  grid.patch_px = patch_px;
  grid.origin = origin;
  grid.microns_per_pixel = slide.microns_per_pixel;
  grid.n_cols = (slide.width_px - origin.x) / patch_px;
  grid.n_rows = (slide.height_px - origin.y) / patch_px;
  if (grid.n_cols == 0 || grid.n_rows == 0) {
    fail(ErrorCode::kEmptyGrid, "slide " + slide.slide_id + " (" +
                                    std::to_string(slide.width_px) + "x" +
                                    std::to_string(slide.height_px) +
                                    ") is smaller than one patch");
  }
  return grid;
}

PatchImage extract_patch(const SlideRef& slide, const TileGrid& grid,
                         int grid_x, int grid_y) {
  if (grid_x < 0 || grid_y < 0 || grid_x >= grid.n_cols ||
      grid_y >= grid.n_rows) {
    fail(ErrorCode::kOutOfBounds,
         "cell (" + std::to_string(grid_x) + "," + std::to_string(grid_y) +
             ") outside " + std::to_string(grid.n_cols) + "x" +
             std::to_string(grid.n_rows) + " grid");
  }
  if (!slide.pixels) {
    fail(ErrorCode::kUnreadableSource,
         "slide " + slide.slide_id + " has no pixel source attached");
  }
  PatchImage patch;
  patch.grid_x = grid_x;
  patch.grid_y = grid_y;
  patch.pixels = slide.pixels->read_region(
      grid.origin.x + grid_x * grid.patch_px,
      grid.origin.y + grid_y * grid.patch_px, grid.patch_px, grid.patch_px);
  if (patch.pixels.width != grid.patch_px ||
      patch.pixels.height != grid.patch_px ||
      patch.pixels.data.size() !=
          static_cast<std::size_t>(grid.patch_px) * grid.patch_px * 3) {
    fail(ErrorCode::kNonRgbSource, "pixel source returned a malformed block");
  }
  return patch;
}

bool tissue_filter(const PatchImage& patch, const TissueFilterParams& params) {
  const auto& px = patch.pixels;
  const std::size_t n = static_cast<std::size_t>(px.width) * px.height;
  if (n == 0) return false;
  std::size_t tissue = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = px.data.data() + i * 3;
    const int lo = std::min({p[0], p[1], p[2]});
    if (lo < params.background_intensity) ++tissue;
  }
  return static_cast<double>(tissue) >=
         params.min_tissue_fraction * static_cast<double>(n);
}

}  // namespace til
