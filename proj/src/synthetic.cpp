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

#include "til/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "til/error.hpp"

namespace til::synth {

namespace {

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void disk(RgbImage& img, int x0, int y0, int px, double cx, double cy, double r,
          const double rgb[3]) {
  const int lo_x = std::max(x0, static_cast<int>(std::floor(cx - r)));
  const int hi_x = std::min(x0 + px - 1, static_cast<int>(std::ceil(cx + r)));
  const int lo_y = std::max(y0, static_cast<int>(std::floor(cy - r)));
  const int hi_y = std::min(y0 + px - 1, static_cast<int>(std::ceil(cy + r)));
  for (int y = lo_y; y <= hi_y; ++y) {
    for (int x = lo_x; x <= hi_x; ++x) {
      const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
      if (d > r) continue;
      // soft rim
      const double a = std::min(1.0, (r - d) / 1.5 + 0.3);
      auto* p = img.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = clamp8(p[c] * (1 - a) + rgb[c] * a);
    }
  }
}

}  // namespace

void paint_cell(RgbImage& image, int x0, int y0, int px, bool positive,
                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 5.0);
  const double base[3] = {228 + 8 * u(rng), 170 + 20 * u(rng), 198 + 14 * u(rng)};
  const double gx = (u(rng) - 0.5) * 16.0 / px;
  const double gy = (u(rng) - 0.5) * 16.0 / px;
  for (int y = 0; y < px; ++y) {
    for (int x = 0; x < px; ++x) {
      const double shade = gx * x + gy * y + noise(rng);
      image.set(x0 + x, y0 + y, clamp8(base[0] + shade), clamp8(base[1] + shade),
                clamp8(base[2] + shade));
    }
  }
  const int n_blobs = positive ? 10 + static_cast<int>(u(rng) * 12)
                               : static_cast<int>(u(rng) * 3);
  for (int i = 0; i < n_blobs; ++i) {
    const double r = positive ? 3.5 + 3.0 * u(rng) : 7.0 + 5.0 * u(rng);
    const double cx = x0 + r + u(rng) * (px - 2 * r);
    const double cy = y0 + r + u(rng) * (px - 2 * r);
    double rgb[3];
    if (positive) {
      rgb[0] = 55 + 30 * u(rng);
      rgb[1] = 25 + 20 * u(rng);
      rgb[2] = 95 + 30 * u(rng);
    } else {
      rgb[0] = 190 + 15 * u(rng);
      rgb[1] = 140 + 15 * u(rng);
      rgb[2] = 185 + 15 * u(rng);
    }
    disk(image, x0, y0, px, cx, cy, r, rgb);
  }
}

RgbImage make_patch(int px, bool positive, std::uint64_t seed) {
  RgbImage img(px, px);
  std::mt19937_64 rng(seed);
  paint_cell(img, 0, 0, px, positive, rng);
  return img;
}

SyntheticSlide make_slide(std::string slide_id, int n_cols, int n_rows,
                          int patch_px, std::vector<std::uint8_t> truth,
                          std::uint64_t seed, std::string patient_id,
                          CancerType cancer_type) {
  if (n_cols <= 0 || n_rows <= 0 || patch_px <= 0) {
    fail(ErrorCode::kInvalidArgument, "synthetic slide dimensions must be positive");
  }
  if (truth.size() != static_cast<std::size_t>(n_cols) * n_rows) {
    fail(ErrorCode::kGeometryMismatch, "truth mask does not match the grid");
  }
  RgbImage img(n_cols * patch_px, n_rows * patch_px);
  for (int y = 0; y < n_rows; ++y) {
    for (int x = 0; x < n_cols; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * n_cols + x;
      std::seed_seq ss{seed, static_cast<std::uint64_t>(i)};
      std::mt19937_64 rng(ss);
      paint_cell(img, x * patch_px, y * patch_px, patch_px, truth[i] != 0, rng);
    }
  }
  SyntheticSlide s;
  if (patient_id.empty()) patient_id = slide_id;
  s.slide = til::make_slide(std::move(slide_id), std::move(img),
                            std::move(patient_id), cancer_type);
  s.patch_px = patch_px;
  s.n_cols = n_cols;
  s.n_rows = n_rows;
  s.truth = std::move(truth);
  return s;
}

SyntheticSlide make_random_slide(std::string slide_id, int n_cols, int n_rows,
                                 int patch_px, double positive_fraction,
                                 std::uint64_t seed, std::string patient_id,
                                 CancerType cancer_type) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution pos(std::clamp(positive_fraction, 0.0, 1.0));
  std::vector<std::uint8_t> truth(static_cast<std::size_t>(n_cols) * n_rows);
  for (auto& t : truth) t = pos(rng) ? 1 : 0;
  return make_slide(std::move(slide_id), n_cols, n_rows, patch_px, std::move(truth),
                    seed, std::move(patient_id), cancer_type);
}

std::vector<PatchRecord> truth_records(const SyntheticSlide& s) {
  std::vector<PatchRecord> out;
  out.reserve(s.truth.size());
  for (int y = 0; y < s.n_rows; ++y) {
    for (int x = 0; x < s.n_cols; ++x) {
      PatchRecord r;
      r.slide_id = s.slide.slide_id;
      r.patient_id = s.slide.patient_id;
      r.cancer_type = s.slide.cancer_type;
      r.grid_x = x;
      r.grid_y = y;
      r.label = s.truth[static_cast<std::size_t>(y) * s.n_cols + x] ? Label::kPositive
                                                                     : Label::kNegative;
      r.source = Source::kManual;
      r.patch_uri = patch_file_name(r.slide_id, x, y);
      out.push_back(std::move(r));
    }
  }
  return out;
}

SyntheticRegion make_region(int n_positive, std::uint64_t seed) {
  if (n_positive < 0 || n_positive > 64) {
    fail(ErrorCode::kValueOutOfRange, "a region has 64 cells");
  }
  std::vector<int> cells(64);
  std::iota(cells.begin(), cells.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<std::uint8_t> truth(64, 0);
  for (int i = 0; i < n_positive; ++i) truth[cells[i]] = 1;
  auto s = make_slide("region", 8, 8, 100, truth, seed);
  const auto* src = dynamic_cast<const InMemoryPixelSource*>(s.slide.pixels.get());
  return {src->image(), std::move(truth)};
}

}  // namespace til::synth
