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
#include <vector>

namespace til {

/// Interleaved 8-bit RGB raster, row-major, value semantics.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3,
             fill) {}

  std::uint8_t* at(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = at(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  /// Copy of the w x h block whose top-left corner is (x, y). No bounds
  /// clamping: the caller guarantees the block is inside the image.
  RgbImage crop(int x, int y, int w, int h) const;

  bool operator==(const RgbImage&) const = default;
};

/// Single-channel 8-bit raster.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

/// Reads an 8-bit RGB image (PNG, TIFF, JPEG... whatever OpenCV decodes).
/// kUnreadableSource when the file cannot be decoded, kNonRgbSource when it
/// is not 3-channel 8-bit.
RgbImage read_rgb(const std::filesystem::path& path);

/// Reads an image without channel conversion. `channel` selects one plane of
/// a multi-channel file (in R,G,B,A order); when absent the file must be
/// single-channel.
GrayImage read_gray(const std::filesystem::path& path, int channel = -1);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

}  // namespace til
