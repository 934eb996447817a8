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

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "til/error.hpp"
#include "til/evaluation.hpp"
#include "toy_model.hpp"

using namespace til;

TEST_CASE("hand-counted confusion") {
  std::vector<std::uint8_t> t{1, 1, 0, 0}, p{1, 0, 1, 0};
  auto m = patch_metrics(p, t);
  CHECK(m.counts.tp == 1);
  CHECK(m.counts.fp == 1);
  CHECK(m.counts.fn == 1);
  CHECK(m.counts.tn == 1);
  CHECK(*m.precision == 0.5);
  CHECK(*m.recall == 0.5);
  CHECK(*m.f1 == 0.5);
  CHECK(m.accuracy == 0.5);
}

TEST_CASE("perfect predictions and undefined f1") {
  std::vector<std::uint8_t> t{1, 0, 0, 1, 1};
  auto m = patch_metrics(t, t);
  CHECK(m.accuracy == 1.0);
  CHECK(*m.f1 == 1.0);
  std::vector<std::uint8_t> z{0, 0, 0};
  auto u = patch_metrics(z, z);
  CHECK_FALSE(u.f1.has_value());
  CHECK_FALSE(u.precision.has_value());
  CHECK(u.accuracy == 1.0);
  CHECK_THROWS_AS(patch_metrics({}, {}), Error);
  CHECK_THROWS_AS(patch_metrics(z, t), Error);
}

TEST_CASE("metrics agree with the confusion oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::uint8_t> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng() % 2;
      t[i] = rng() % 3 == 0;
    }
    auto m = patch_metrics(p, t, true);
    auto c = oracle::confusion(p, t);
    CHECK(m.accuracy == doctest::Approx(double(c.tp + c.tn) / n));
    const double f = oracle::f1(c);
    if (f < 0) {
      CHECK_FALSE(m.f1.has_value());
    } else {
      REQUIRE(m.f1.has_value());
      CHECK(*m.f1 == doctest::Approx(f));
    }
  }
}

TEST_CASE("macro f1") {
  std::vector<std::uint8_t> t{1, 1, 0, 0}, p{1, 0, 1, 0};
  auto m = patch_metrics(p, t, true);
  REQUIRE(m.macro_f1.has_value());
  CHECK(*m.macro_f1 == 0.5);
  CHECK_FALSE(patch_metrics(p, t).macro_f1.has_value());
}

TEST_CASE("evaluate scores per cohort") {
  AnnotationManifest test;
  std::vector<double> s;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 60; ++i) {
    const auto type = i < 25 ? CancerType::LUAD : (i < 45 ? CancerType::BRCA : CancerType::SKCM);
    const bool pos = i % 3 == 0;
    test.records.push_back(fixture::record("s", i, 0, type, pos, Source::kManual));
    s.push_back(pos ? 0.4 + 0.6 * u(rng) : 0.6 * u(rng));
  }
  auto r = evaluate_scores({{"a", s}, {"b", s}}, test, {{"a", 0.5}, {"b", 0.5}});
  CHECK(r.n_test == 60);
  REQUIRE(r.models.size() == 2);
  CHECK(r.models[0].overall.metrics.accuracy == r.models[1].overall.metrics.accuracy);
  CHECK(r.models[0].overall.auc == r.models[1].overall.auc);
  std::size_t sum = 0;
  double weighted = 0;
  for (const auto& [type, row] : r.models[0].per_cancer_type) {
    sum += row.n;
    weighted += row.metrics.accuracy * row.n;
  }
  CHECK(sum == 60);
  CHECK(weighted / 60 == doctest::Approx(r.models[0].overall.metrics.accuracy));
  CHECK(r.models[0].per_cancer_type.size() == 3);

  auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j["n_test"] == 60);
  CHECK(j["models"][0]["per_cancer_type"].contains("BRCA"));

  CHECK_THROWS_AS(evaluate_scores({{"a", s}}, test, {}), Error);
  CHECK_THROWS_AS(evaluate_scores({{"a", s}}, test, {{"a", 0.5}, {"zz", 0.5}}), Error);
  s.pop_back();
  CHECK_THROWS_AS(evaluate_scores({{"a", s}}, test, {{"a", 0.5}}), Error);
}

TEST_CASE("toy model accuracy on a separable test set") {
  auto set = toy::make_patches(120, 77, "acc");
  for (auto& r : set.manifest.records) r.cancer_type = CancerType::LUAD;
  auto r = evaluate_models({{"toy", &toy::model()}}, set.manifest, {{"toy", 0.5}},
                           set.loader());
  CHECK(r.models[0].overall.metrics.accuracy >= 0.95);
}

TEST_CASE("rounded average of ratings") {
  using L = TilLevel;
  std::vector<L> a{L::kLow, L::kMedium, L::kMedium};
  CHECK(rounded_average(a) == L::kMedium);
  std::vector<L> b{L::kLow, L::kMedium};
  CHECK(rounded_average(b) == L::kMedium);
  std::vector<L> c{L::kLow, L::kLow, L::kMedium};
  CHECK(rounded_average(c) == L::kLow);
  std::vector<L> d{L::kMedium, L::kHigh};
  CHECK(rounded_average(d) == L::kHigh);
  std::vector<L> e{L::kLow, L::kHigh};
  CHECK(rounded_average(e) == L::kMedium);
  CHECK_THROWS_AS(rounded_average(std::vector<L>{}), Error);
}

TEST_CASE("region distribution quantiles") {
  std::vector<RegionRecord> recs{
      make_region_record("a", {TilLevel::kLow}, 1),
      make_region_record("b", {TilLevel::kLow}, 2),
      make_region_record("c", {TilLevel::kHigh}, 62),
      make_region_record("d", {TilLevel::kHigh}, 60),
  };
  auto d = region_distribution(recs);
  CHECK(d.summary.at(TilLevel::kLow)->median == 1.5);
  CHECK(d.summary.at(TilLevel::kHigh)->median == 61);
  CHECK(d.counts.at(TilLevel::kHigh) == std::vector<int>{60, 62});
  CHECK_FALSE(d.summary.at(TilLevel::kMedium).has_value());

  std::vector<RegionRecord> single{make_region_record("x", {TilLevel::kMedium}, 17)};
  auto q = region_distribution(single).summary.at(TilLevel::kMedium);
  CHECK(q->min == 17);
  CHECK(q->q1 == 17);
  CHECK(q->median == 17);
  CHECK(q->max == 17);
  CHECK_THROWS_AS(make_region_record("bad", {TilLevel::kLow}, 65), Error);

  auto dir = oracle::temp_dir("regions");
  write_distribution(d, dir / "v.csv", dir / "v.json");
  std::ifstream csv(dir / "v.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 5);
  std::ifstream js(dir / "v.json");
  auto j = nlohmann::json::parse(js);
  CHECK(j["LOW"]["quantiles"]["median"] == 1.5);
  CHECK(j["MEDIUM"]["quantiles"].is_null());
  std::filesystem::remove_all(dir);
}

TEST_CASE("region counting") {
  const auto& m = toy::model();
  auto none = synth::make_region(0, 3);
  auto all = synth::make_region(64, 3);
  CHECK(region_count(m, none.image, 1.0) <= region_count(m, none.image, 0.5));
  CHECK(region_count(m, all.image, 0.0) == 64);

  auto three = synth::make_region(3, 9);
  const auto cells = region_cells(three.image);
  int direct = 0;
  for (const auto& c : cells) direct += m.score(c) >= 0.5;
  CHECK(region_count(m, three.image, 0.5) == direct);
  CHECK(direct == 3);

  int prev = -1;
  for (double t = 1.0; t >= 0.0; t -= 0.1) {
    const int c = region_count(m, three.image, std::max(t, 0.0));
    CHECK(c >= prev);
    prev = c;
  }
  CHECK_THROWS_AS(region_count(m, RgbImage(800, 700), 0.5), Error);
}
