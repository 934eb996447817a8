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

#include <doctest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "til/error.hpp"
#include "til/wsi_tiling.hpp"

using namespace til;

namespace {

SlideRef sized(int w, int h) {
  SlideRef s;
  s.slide_id = "s";
  s.width_px = w;
  s.height_px = h;
  return s;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("grid dimensions use floor division") {
  auto g = build_grid(sized(100000, 80000), 100);
  CHECK(g.n_cols == 1000);
  CHECK(g.n_rows == 800);
  g = build_grid(sized(1050, 999), 100);
  CHECK(g.n_cols == 10);
  CHECK(g.n_rows == 9);
  CHECK(code_of([] { build_grid(sized(99, 100), 100); }) == ErrorCode::kEmptyGrid);
  CHECK(code_of([] { build_grid(sized(500, 500), 0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { build_grid(sized(500, 500), -3); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("grid origin offset shrinks the grid") {
  auto g = build_grid(sized(1050, 999), 100, {60, 0});
  CHECK(g.n_cols == 9);
  CHECK(g.n_rows == 9);
  CHECK(g.origin == Origin{60, 0});
  CHECK(code_of([] { build_grid(sized(100, 100), 10, {100, 0}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("extract_patch returns the exact block") {
  auto slide = make_slide("white", RgbImage(300, 300, 255));
  auto grid = build_grid(slide, 100);
  auto p = extract_patch(slide, grid, 0, 0);
  CHECK(p.pixels.width == 100);
  CHECK(p.pixels.height == 100);
  CHECK(std::all_of(p.pixels.data.begin(), p.pixels.data.end(),
                    [](std::uint8_t v) { return v == 255; }));

  RgbImage img(300, 300, 255);
  img.set(150, 150, 0, 0, 0);
  auto marked = make_slide("m", img);
  auto q = extract_patch(marked, build_grid(marked, 100), 1, 1);
  CHECK(q.pixels.at(50, 50)[0] == 0);
  int black = 0;
  for (std::size_t i = 0; i < q.pixels.data.size(); i += 3) black += q.pixels.data[i] == 0;
  CHECK(black == 1);

  CHECK(code_of([&] { extract_patch(slide, grid, grid.n_cols, 0); }) ==
        ErrorCode::kOutOfBounds);
  CHECK(code_of([&] { extract_patch(slide, grid, 0, -1); }) == ErrorCode::kOutOfBounds);
  SlideRef bare = sized(300, 300);
  CHECK(code_of([&] { extract_patch(bare, grid, 0, 0); }) == ErrorCode::kUnreadableSource);
}

TEST_CASE("tiles are disjoint and deterministic") {
  std::mt19937 rng(3);
  RgbImage img(250, 170);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
  auto slide = make_slide("r", img);
  auto grid = build_grid(slide, 40, {5, 3});
  std::vector<int> hits(static_cast<std::size_t>(img.width) * img.height, 0);
  for (int y = 0; y < grid.n_rows; ++y) {
    for (int x = 0; x < grid.n_cols; ++x) {
      auto a = extract_patch(slide, grid, x, y);
      auto b = extract_patch(slide, grid, x, y);
      CHECK(a.pixels == b.pixels);
      CHECK(a.pixels == img.crop(5 + 40 * x, 3 + 40 * y, 40, 40));
      for (int j = 0; j < 40; ++j)
        for (int i = 0; i < 40; ++i) ++hits[(3 + 40 * y + j) * img.width + 5 + 40 * x + i];
    }
  }
  CHECK(*std::max_element(hits.begin(), hits.end()) == 1);
  CHECK(std::count(hits.begin(), hits.end(), 1) == grid.n_cells() * 40 * 40);
}

TEST_CASE("tissue filter") {
  PatchImage white{0, 0, RgbImage(10, 10, 255)};
  CHECK_FALSE(tissue_filter(white));
  PatchImage pink{0, 0, RgbImage(10, 10)};
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) pink.pixels.set(x, y, 220, 120, 180);
  CHECK(tissue_filter(pink));
  PatchImage half = pink;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 10; ++x) half.pixels.set(x, y, 255, 255, 255);
  CHECK(tissue_filter(half, {220, 0.5}));
  CHECK_FALSE(tissue_filter(half, {220, 0.51}));
  // min channel exactly at the intensity counts as background
  PatchImage edge{0, 0, RgbImage(4, 4, 220)};
  CHECK_FALSE(tissue_filter(edge));
}

TEST_CASE("slide descriptor and image files load") {
  auto dir = oracle::temp_dir("tiling");
  RgbImage img(230, 120, 40);
  img.set(7, 9, 1, 2, 3);
  write_png(dir / "slide_a.png", img);
  {
    std::ofstream d(dir / "a.json");
    d << R"({"slide_id":"A","patient_id":"P1","cancer_type":"BRCA",)"
      << R"("magnification":20,"microns_per_pixel":0.5,"pixel_source":"slide_a.png"})";
  }
  auto s = load_slide(dir / "a.json");
  CHECK(s.slide_id == "A");
  CHECK(s.patient_id == "P1");
  CHECK(s.cancer_type == CancerType::BRCA);
  CHECK(s.width_px == 230);
  auto g = build_grid(s, 100);
  CHECK(g.n_cols == 2);
  CHECK(g.n_rows == 1);
  CHECK(extract_patch(s, g, 0, 0).pixels.at(7, 9)[2] == 3);

  auto direct = load_slide(dir / "slide_a.png");
  CHECK(direct.slide_id == "slide_a");

  {
    std::ofstream bad(dir / "junk.png");
    bad << "not an image";
  }
  CHECK(code_of([&] { load_slide(dir / "junk.png"); }) == ErrorCode::kUnreadableSource);
  GrayImage gray{4, 4, std::vector<std::uint8_t>(16, 9)};
  write_png(dir / "gray.png", gray);
  CHECK(code_of([&] { load_slide(dir / "gray.png"); }) == ErrorCode::kNonRgbSource);
  std::filesystem::remove_all(dir);
}
