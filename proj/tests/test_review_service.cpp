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
#include "til/error.hpp"
#include "til/review_service.hpp"
#include "til/synthetic.hpp"

using namespace til;
namespace fs = std::filesystem;

namespace {

TilMap make_map(const std::string& slide, int cols, int rows, std::vector<double> probs) {
  TilMap m;
  m.slide_id = slide;
  m.n_cols = cols;
  m.n_rows = rows;
  m.probs = std::move(probs);
  m.model_id = "test";
  m.created_at = "2026-01-01T00:00:00Z";
  return m;
}

TilMap random_map(std::mt19937_64& rng, const std::string& slide, int cols, int rows) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> p(static_cast<std::size_t>(cols) * rows);
  for (auto& v : p) v = u(rng);
  return make_map(slide, cols, rows, std::move(p));
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

struct Env {
  fs::path dir = oracle::temp_dir("review");
  ReviewService svc{{dir / "store", {}, 200}};
  ~Env() { fs::remove_all(dir); }
};

MapMeta meta_for(CancerType t) {
  MapMeta m;
  m.cancer_type = t;
  return m;
}

}  // namespace

TEST_CASE("listing") {
  Env env;
  CHECK(env.svc.list_maps().empty());
  std::mt19937_64 rng(1);
  env.svc.store().add("m1", random_map(rng, "zeta", 3, 4), meta_for(CancerType::LUAD));
  env.svc.store().add("m2", random_map(rng, "alpha", 5, 2));
  env.svc.store().add("m3", random_map(rng, "mid", 1, 1));
  auto list = env.svc.list_maps();
  REQUIRE(list.size() == 3);
  CHECK(list[0].slide_id == "alpha");
  CHECK(list[1].slide_id == "mid");
  CHECK(list[2].slide_id == "zeta");
  CHECK(list[0].n_cells == 10);
  CHECK(list[2].n_cells == 12);
  CHECK(list[2].cancer_type == CancerType::LUAD);
  CHECK(list[0].status == "UNREVIEWED");
  CHECK(code_of([&] { env.svc.store().add("m1", random_map(rng, "x", 1, 1)); }) ==
        ErrorCode::kConflict);
  CHECK(code_of([&] { env.svc.store().add("../evil", random_map(rng, "x", 1, 1)); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("preview geometry and block means") {
  CHECK(preview_factor(1000, 800, 200) == 5);
  CHECK(preview_factor(100, 80, 200) == 1);
  Env env;
  std::mt19937_64 rng(2);
  env.svc.store().add("big", random_map(rng, "b", 1000, 800));
  auto p = env.svc.get_map("big");
  CHECK(p.preview_cols == 200);
  CHECK(p.preview_rows == 160);
  CHECK_FALSE(p.include_full);

  std::vector<double> v{0.0, 0.2, 0.4, 0.6, 0.8,   //
                        1.0, 0.2, 0.4, 0.6, 0.8,   //
                        0.1, 0.1, 0.1, 0.1, 0.1};
  auto means = block_mean(v, 5, 3, 2);
  REQUIRE(means.size() == 6);
  CHECK(means[0] == doctest::Approx((0.0 + 0.2 + 1.0 + 0.2) / 4));
  CHECK(means[2] == doctest::Approx((0.8 + 0.8) / 2));
  CHECK(means[3] == doctest::Approx(0.1));
  CHECK(means[5] == doctest::Approx(0.1));

  env.svc.store().add("const", make_map("c", 450, 230, std::vector<double>(450 * 230, 0.3)));
  auto c = env.svc.get_map("const", true);
  for (double x : c.preview) CHECK(x == doctest::Approx(0.3));
  CHECK(c.map->probs.size() == 450u * 230u);
  CHECK(code_of([&] { env.svc.get_map("nope"); }) == ErrorCode::kNotFound);
}

TEST_CASE("threshold preview") {
  Env env;
  env.svc.store().add("four", make_map("f", 2, 2, {0.1, 0.3, 0.6, 0.9}));
  CHECK(env.svc.preview_threshold("four", 0.5).positive_count == 2);
  CHECK(env.svc.preview_threshold("four", 0.0).positive_fraction == 1.0);
  CHECK(env.svc.preview_threshold("four", 0.6).positive_count == 2);
  CHECK(code_of([&] { env.svc.preview_threshold("four", 1.5); }) ==
        ErrorCode::kValueOutOfRange);
  std::size_t prev = 0;
  for (double t = 1.0; t >= 0.0; t -= 0.05) {
    auto c = env.svc.preview_threshold("four", std::max(0.0, t)).positive_count;
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("boundary samples") {
  Env env;
  auto slide = synth::make_random_slide("pix", 4, 1, 100, 0.5, 3);
  const auto* src = dynamic_cast<const InMemoryPixelSource*>(slide.slide.pixels.get());
  write_png(env.dir / "store" / "pix.png", src->image());
  MapMeta meta;
  meta.pixel_source = "pix.png";
  env.svc.store().add("px", make_map("pix", 4, 1, {0.40, 0.45, 0.55, 0.60}), meta);
  auto s = env.svc.sample_patches("px", 0.5, 1);
  REQUIRE(s.positives.size() == 1);
  REQUIRE(s.negatives.size() == 1);
  CHECK(s.positives[0].prob == 0.55);
  CHECK(s.negatives[0].prob == 0.45);
  CHECK_FALSE(s.positives[0].png.empty());
  auto again = env.svc.sample_patches("px", 0.5, 1);
  CHECK(again.positives[0].png == s.positives[0].png);

  auto high = env.svc.sample_patches("px", 0.99, 3);
  CHECK(high.positives.empty());
  CHECK(high.negatives.size() == 3);
  CHECK(high.negatives[0].prob == 0.60);

  env.svc.store().add("ties", make_map("pix", 4, 1, {0.4, 0.6, 0.4, 0.6}), meta);
  auto t = env.svc.sample_patches("ties", 0.5, 2);
  CHECK(t.positives[0].grid_x == 1);
  CHECK(t.positives[1].grid_x == 3);
  CHECK(t.negatives[0].grid_x == 0);

  env.svc.store().add("nopix", make_map("q", 2, 1, {0.1, 0.9}));
  CHECK(code_of([&] { env.svc.sample_patches("nopix", 0.5, 1); }) ==
        ErrorCode::kUnavailable);
}

TEST_CASE("commit exports the whole map") {
  Env env;
  std::mt19937_64 rng(3);
  auto map = random_map(rng, "big", 400, 250);
  env.svc.store().add("m", map, meta_for(CancerType::STAD));
  auto s = env.svc.create_session("m");
  CHECK(s.status == SessionStatus::kOpen);
  CHECK(env.svc.list_maps()[0].status == "IN_REVIEW");
  auto r = env.svc.commit(s.session_id, 0.42, 0, 1);
  CHECK(r.n_records == 100000);
  CHECK(r.session.status == SessionStatus::kCommitted);
  REQUIRE(r.session.committed_manifest.has_value());
  auto manifest = read_manifest(*r.session.committed_manifest);
  CHECK(manifest.records.size() == 100000);
  for (const auto& rec : manifest.records) {
    CHECK((map.at(rec.grid_x, rec.grid_y) >= 0.42) == (rec.label == Label::kPositive));
  }
  CHECK(env.svc.list_maps()[0].status == "COMMITTED");
  CHECK(code_of([&] { env.svc.commit(s.session_id, 0.5, 10, 1); }) == ErrorCode::kConflict);
  CHECK(code_of([&] { env.svc.create_session("missing"); }) == ErrorCode::kNotFound);
  CHECK(code_of([&] { env.svc.commit("s999", 0.5, 10, 1); }) == ErrorCode::kNotFound);
}

TEST_CASE("crash during commit leaves the session open") {
  Env env;
  std::mt19937_64 rng(4);
  env.svc.store().add("m", random_map(rng, "c", 20, 20), meta_for(CancerType::READ));
  auto s = env.svc.create_session("m");
  env.svc.set_commit_fault_hook([](const fs::path& tmp) {
    CHECK(fs::exists(tmp));
    throw std::runtime_error("simulated crash");
  });
  CHECK_THROWS(env.svc.commit(s.session_id, 0.5, 50, 2));
  auto after = env.svc.session(s.session_id);
  CHECK(after.status == SessionStatus::kOpen);
  CHECK_FALSE(after.committed_manifest.has_value());
  CHECK(fs::is_empty(env.svc.config().manifest_dir));

  env.svc.set_commit_fault_hook({});
  auto r = env.svc.commit(s.session_id, 0.5, 50, 2);
  CHECK(r.n_records == 50);
  CHECK(read_manifest(*r.session.committed_manifest).records.size() == 50);
}

TEST_CASE("commit needs a cohort") {
  Env env;
  std::mt19937_64 rng(5);
  env.svc.store().add("m", random_map(rng, "c", 2, 2));
  auto s = env.svc.create_session("m");
  CHECK(code_of([&] { env.svc.commit(s.session_id, 0.5, 0, 1); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(env.svc.session(s.session_id).status == SessionStatus::kOpen);
}
