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

#include <random>

#include "oracles.hpp"
#include "til/calibration.hpp"
#include "til/error.hpp"
#include "til/model.hpp"
#include "toy_model.hpp"

using namespace til;

namespace {

RgbImage marker_image(int w, int h, int mx, int my) {
  RgbImage img(w, h, 0);
  img.set(mx, my, 255, 255, 255);
  return img;
}

std::pair<int, int> find_marker(const RgbImage& img) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y)[0] == 255) return {x, y};
  return {-1, -1};
}

}  // namespace

TEST_CASE("config validation") {
  auto c = default_config(Architecture::kVgg16Class);
  CHECK(c.input_size_px == 224);
  CHECK(c.learning_rate == 0.0005);
  CHECK(c.batch_size == 128);
  CHECK_FALSE(c.batch_norm);
  CHECK(default_config(Architecture::kInceptionV4Class).input_size_px == 299);
  CHECK(default_config(Architecture::kCompactRef).input_size_px == 64);
  c.input_size_px = 299;
  CHECK_THROWS_AS(c.validate(), Error);
  c = default_config(Architecture::kCompactRef);
  c.batch_norm = true;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_architecture("VGG16_CLASS") == Architecture::kVgg16Class);
  CHECK(parse_architecture("inception-v4") == Architecture::kInceptionV4Class);
}

TEST_CASE("presets") {
  CHECK(presets().size() == 8);
  const auto& p = find_preset("vgg-mix");
  CHECK(p.architecture == Architecture::kVgg16Class);
  CHECK(p.training_set == TrainingSet::kMix);
  CHECK(p.expected_records == 155154);
  CHECK(find_preset("incep-manual").expected_records == 86154);
  CHECK_THROWS_AS(find_preset("vgg-baseline"), Error);
}

TEST_CASE("resize") {
  PatchImage p{0, 0, RgbImage(100, 100)};
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) p.pixels.set(x, y, 12, 200, 77);
  auto r = resize_patch(p, 224);
  CHECK(r.pixels.width == 224);
  CHECK(r.pixels.height == 224);
  for (std::size_t i = 0; i < r.pixels.data.size(); i += 3) {
    CHECK(r.pixels.data[i] == 12);
    CHECK(r.pixels.data[i + 1] == 200);
  }
  CHECK(resize_patch(p, 299).pixels.width == 299);
  CHECK_THROWS_AS(resize_patch(p, 0), Error);
}

TEST_CASE("augmentation geometry") {
  AugmentationConfig zero;
  zero.shift_px_max = 0;
  zero.rotate_flip = false;
  zero.hsl = {0, 0, 0};
  std::mt19937_64 rng(1);
  std::mt19937 fill(2);
  PatchImage p{3, 4, RgbImage(100, 100)};
  for (auto& v : p.pixels.data) v = static_cast<std::uint8_t>(fill());
  auto same = augment(p, zero, rng);
  CHECK(same.pixels == p.pixels);
  CHECK(same.grid_x == 3);

  AugmentationParams shift;
  shift.shift_x = 20;
  auto moved = apply_augmentation(marker_image(100, 100, 50, 50), shift);
  CHECK(find_marker(moved) == std::pair{30, 50});

  AugmentationParams rot;
  rot.dihedral = 1;
  auto rotated = apply_augmentation(marker_image(100, 100, 10, 20), rot);
  CHECK(find_marker(rotated) == std::pair{79, 10});

  // Each dihedral element is a bijection of the pixel grid.
  for (int d = 0; d < 8; ++d) {
    AugmentationParams q;
    q.dihedral = d;
    auto out = apply_augmentation(p.pixels, q);
    auto a = p.pixels.data, b = out.data;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("augmentation draws stay within bounds") {
  AugmentationConfig cfg;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    auto a = draw_augmentation(cfg, rng);
    CHECK(std::abs(a.shift_x) <= 20);
    CHECK(std::abs(a.shift_y) <= 20);
    CHECK(a.dihedral >= 0);
    CHECK(a.dihedral < 8);
    CHECK(std::abs(a.hue_deg) <= 5.0);
    CHECK(std::abs(a.sat_frac) <= 0.10);
    CHECK(std::abs(a.light_frac) <= 0.05);
  }
}

TEST_CASE("batch planner determinism and epoch counts") {
  auto set = toy::make_patches(30, 5, "plan");
  set.manifest.records[0].label = Label::kPositive;
  auto cfg = toy::toy_config();
  cfg.batch_size = 6;
  AugmentationConfig aug;
  aug.rng_seed = 4;
  BatchPlanner a(cfg, aug, set.manifest), b(cfg, aug, set.manifest);
  for (int step = 1; step <= 20; ++step) {
    auto pa = a.next(step), pb = b.next(step);
    CHECK(pa.indices == pb.indices);
    for (std::size_t i = 0; i < pa.augmentations.size(); ++i) {
      CHECK(pa.augmentations[i].shift_x == pb.augmentations[i].shift_x);
      CHECK(pa.augmentations[i].hue_deg == pb.augmentations[i].hue_deg);
    }
  }
  REQUIRE(a.epochs().size() == 4);
  const auto stats = manifest_stats(set.manifest);
  for (const auto& e : a.epochs()) {
    CHECK(e.positives == stats.positives);
    CHECK(e.negatives == stats.negatives);
  }
}

TEST_CASE("training errors and zero learning rate") {
  auto set = toy::make_patches(10, 2, "z");
  auto cfg = toy::toy_config();
  cfg.max_steps = 3;
  cfg.learning_rate = 0.0;
  auto m = train(cfg, {}, set.manifest, set.loader());
  nn::Network net(nn::ArchitectureSpec(architecture_spec(Architecture::kCompactRef)));
  CHECK(m.weights() == net.init_params(cfg.rng_seed));
  CHECK(m.log().steps.size() == 3);

  auto single = set.manifest;
  for (auto& r : single.records) r.label = Label::kNegative;
  try {
    train(cfg, {}, single, set.loader());
    FAIL("single-class manifest accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingleClass);
  }

  cfg.learning_rate = 1e300;
  cfg.max_steps = 50;
  try {
    train(cfg, {}, set.manifest, set.loader());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteLoss);
  }

  auto bad_loader = [](const PatchRecord&) -> RgbImage {
    fail(ErrorCode::kUnreadableSource, "missing patch");
  };
  cfg.learning_rate = 0.001;
  CHECK_THROWS_AS(train(cfg, {}, set.manifest, bad_loader), Error);
}

TEST_CASE("toy model separates the synthetic classes") {
  const auto& m = toy::model();
  const auto& log = m.log();
  REQUIRE(log.steps.size() == 500);
  double early = 0, late = 0;
  for (int i = 0; i < 50; ++i) {
    early += log.steps[i].loss;
    late += log.steps[450 + i].loss;
  }
  CHECK(late < early);

  const auto held = toy::make_patches(100, 99, "held");
  const auto scores = predict_batch(m, held.images());
  CHECK(auc_rank({scores, held.labels()}) >= 0.99);
  for (double s : scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }

  const auto dark = synth::make_patch(100, true, 5);
  const auto blank = synth::make_patch(100, false, 5);
  CHECK(m.score(dark) > m.score(blank));
}

TEST_CASE("predict_batch is order preserving and batch independent") {
  const auto& m = toy::model();
  const auto set = toy::make_patches(7, 42, "batch");
  auto imgs = set.images();
  const auto all = predict_batch(m, imgs);
  const auto first = predict_batch(m, std::span<const RgbImage>(imgs).subspan(0, 3));
  const auto rest = predict_batch(m, std::span<const RgbImage>(imgs).subspan(3));
  std::vector<double> joined = first;
  joined.insert(joined.end(), rest.begin(), rest.end());
  CHECK(all == joined);
  std::vector<RgbImage> dup{imgs[2], imgs[5], imgs[2]};
  const auto d = predict_batch(m, dup);
  CHECK(d[0] == d[2]);
  CHECK(d[0] == all[2]);
  CHECK(predict_batch(m, std::vector<RgbImage>{}).empty());
}

TEST_CASE("checkpoint round trip") {
  const auto& m = toy::model();
  auto dir = oracle::temp_dir("ckpt");
  save_checkpoint(m, dir / "ck");
  CHECK(std::filesystem::exists(dir / "ck" / "weights.bin"));
  CHECK(std::filesystem::exists(dir / "ck" / "config.json"));
  CHECK(std::filesystem::exists(dir / "ck" / "training_log.jsonl"));
  auto r = load_checkpoint(dir / "ck");
  CHECK(r.weights() == m.weights());
  CHECK(r.model_id() == m.model_id());
  CHECK(r.config().learning_rate == m.config().learning_rate);
  CHECK(r.augmentation().rng_seed == m.augmentation().rng_seed);
  CHECK(r.log().steps.size() == m.log().steps.size());
  CHECK(r.log().manifest_positives == m.log().manifest_positives);
  const auto p = synth::make_patch(100, true, 3);
  CHECK(r.score(p) == m.score(p));
  std::filesystem::remove_all(dir);
}
