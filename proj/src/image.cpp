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

#include "til/image.hpp"

#include <cstring>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "til/error.hpp"

namespace til {

RgbImage RgbImage::crop(int x, int y, int w, int h) const {
  RgbImage out(w, h);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
  for (int r = 0; r < h; ++r) {
    std::memcpy(out.at(0, r), at(x, y + r), row_bytes);
  }
  return out;
}

namespace {

cv::Mat to_bgr_mat(const RgbImage& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3,
              const_cast<std::uint8_t*>(image.data.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    fail(ErrorCode::kUnreadableSource, "cannot decode image " + path.string());
  }
  if (raw.depth() != CV_8U || raw.channels() != 3) {
    fail(ErrorCode::kNonRgbSource,
         path.string() + " is not an 8-bit 3-channel image (channels=" +
             std::to_string(raw.channels()) + ")");
  }
  cv::Mat rgb;
  cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
  RgbImage out(rgb.cols, rgb.rows);
  for (int r = 0; r < rgb.rows; ++r) {
    std::memcpy(out.at(0, r), rgb.ptr(r), static_cast<std::size_t>(rgb.cols) * 3);
  }
  return out;
}

GrayImage read_gray(const std::filesystem::path& path, int channel) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    fail(ErrorCode::kUnreadableSource, "cannot decode image " + path.string());
  }
  if (raw.depth() != CV_8U) {
    fail(ErrorCode::kInvalidArgument, path.string() + " is not 8-bit");
  }
  cv::Mat plane;
  if (raw.channels() == 1) {
    if (channel > 0) {
      fail(ErrorCode::kInvalidArgument, "channel out of range for gray image");
    }
    plane = raw;
  } else {
    if (channel < 0) {
      fail(ErrorCode::kInvalidArgument,
           path.string() + " has " + std::to_string(raw.channels()) +
               " channels; select one explicitly");
    }
    if (channel >= raw.channels()) {
      fail(ErrorCode::kInvalidArgument, "channel out of range");
    }
    // OpenCV stores BGR(A); callers index in RGB(A) order.
    int cv_channel = channel;
    if (channel == 0) cv_channel = 2;
    if (channel == 2) cv_channel = 0;
    cv::extractChannel(raw, plane, cv_channel);
  }
  GrayImage out{plane.cols, plane.rows, {}};
  out.data.resize(static_cast<std::size_t>(plane.cols) * plane.rows);
  for (int r = 0; r < plane.rows; ++r) {
    std::memcpy(out.data.data() + static_cast<std::size_t>(r) * plane.cols,
                plane.ptr(r), static_cast<std::size_t>(plane.cols));
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (!cv::imwrite(path.string(), to_bgr_mat(image))) {
    fail(ErrorCode::kIoError, "cannot write " + path.string());
  }
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  cv::Mat m(image.height, image.width, CV_8UC1,
            const_cast<std::uint8_t*>(image.data.data()));
  if (!cv::imwrite(path.string(), m)) {
    fail(ErrorCode::kIoError, "cannot write " + path.string());
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", to_bgr_mat(image), buf)) {
    fail(ErrorCode::kIoError, "png encoding failed");
  }
  return buf;
}

}  // namespace til
