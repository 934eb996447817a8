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

#include <cmath>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "til/calibration.hpp"
#include "til/error.hpp"

using namespace til;

namespace {

ScoredSet random_set(std::mt19937_64& rng, int n, int levels) {
  ScoredSet s;
  std::uniform_int_distribution<int> q(0, levels);
  for (int i = 0; i < n; ++i) {
    s.scores.push_back(static_cast<double>(q(rng)) / levels);
    s.labels.push_back(static_cast<int>(rng() % 2));
  }
  s.labels[0] = 0;
  s.labels[1] = 1;
  return s;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc_rank({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}}) == 1.0);
  CHECK(auc_rank({{0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}}) == 0.5);
  CHECK(auc_rank({{0.2, 0.4, 0.6, 0.8}, {0, 1, 0, 1}}) == 0.75);
  CHECK_THROWS_AS(auc_rank({{0.1, 0.2}, {1, 1}}), Error);
}

TEST_CASE("auc matches pairwise oracle and is rank invariant") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_set(rng, 2 + static_cast<int>(rng() % 150), 1 + static_cast<int>(rng() % 30));
    const double a = auc_rank(s);
    CHECK(std::abs(a - oracle::auc_pairs(s.scores, s.labels)) <= 1e-12);
    ScoredSet cubed = s;
    for (auto& v : cubed.scores) v = v * v * v;
    CHECK(auc_rank(cubed) == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("equal-error threshold examples") {
  auto r = youden_threshold({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}});
  CHECK(r.chosen_threshold == 0.8);
  CHECK(r.criterion_value == 0.0);
  CHECK(r.method == ThresholdMethod::kEqualError);
  CHECK_THROWS_AS(youden_threshold({{0.3, 0.4}, {0, 0}}), Error);
}

TEST_CASE("equal-error threshold matches exhaustive scan") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = random_set(rng, 2 + static_cast<int>(rng() % 60), 1 + static_cast<int>(rng() % 12));
    auto r = youden_threshold(s);
    auto o = oracle::eer_scan(s.scores, s.labels);
    CHECK(r.chosen_threshold == o.threshold);
  }
}

TEST_CASE("chosen threshold follows a monotone transform") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_set(rng, 40, 20);
    auto r = youden_threshold(s);
    ScoredSet cubed = s;
    for (auto& v : cubed.scores) v = v * v * v;
    auto rc = youden_threshold(cubed);
    CHECK(rc.chosen_threshold == doctest::Approx(std::pow(r.chosen_threshold, 3)));
  }
}

TEST_CASE("youden-j maximises tpr - fpr") {
  ScoredSet s{{0.1, 0.3, 0.35, 0.6, 0.7, 0.9}, {0, 1, 0, 0, 1, 1}};
  auto r = youden_threshold(s, ThresholdMethod::kYoudenJ);
  double best = -2;
  for (const auto& p : r.roc.points) best = std::max(best, p.tpr - p.fpr);
  CHECK(r.criterion_value == doctest::Approx(best));
  CHECK(r.chosen_threshold == 0.7);
}

TEST_CASE("roc bookkeeping") {
  std::mt19937_64 rng(2);
  auto s = random_set(rng, 80, 15);
  auto roc = roc_curve(s);
  long long pos = std::count(s.labels.begin(), s.labels.end(), 1);
  long long neg = static_cast<long long>(s.size()) - pos;
  CHECK(roc.points.front().threshold == 0.0);
  CHECK(roc.points.back().threshold == 1.0);
  for (std::size_t i = 0; i < roc.points.size(); ++i) {
    const auto& p = roc.points[i];
    CHECK(p.fp + p.tn == neg);
    CHECK(p.fn + p.tp == pos);
    CHECK(p.tpr == doctest::Approx(1.0 - p.fnr));
    if (i > 0) {
      CHECK(p.threshold > roc.points[i - 1].threshold);
      CHECK(p.fpr <= roc.points[i - 1].fpr);
    }
  }
}

TEST_CASE("apply_threshold boundary and range") {
  std::vector<double> v{0.42, 0.41};
  auto d = apply_threshold(v, 0.42);
  CHECK(d[0] == 1);
  CHECK(d[1] == 0);
  std::vector<double> w{0.0, 0.3, 1.0};
  auto all = apply_threshold(w, 0.0);
  CHECK(std::count(all.begin(), all.end(), 1) == 3);
  auto none = apply_threshold(std::vector<double>{0.1, 0.2}, std::nextafter(0.2, 1.0));
  CHECK(std::count(none.begin(), none.end(), 1) == 0);
  CHECK_THROWS_AS(apply_threshold(w, 1.01), Error);
  CHECK_THROWS_AS(apply_threshold(w, -0.01), Error);
}

TEST_CASE("scores csv") {
  auto dir = oracle::temp_dir("cal");
  {
    std::ofstream f(dir / "s.csv");
    f << "score,label\n0.1,0\n0.9,1\n";
  }
  auto s = read_scores_csv((dir / "s.csv").string());
  CHECK(s.size() == 2);
  CHECK(s.labels[1] == 1);
  {
    std::ofstream f(dir / "bad.csv");
    f << "0.1,2\n";
  }
  CHECK_THROWS_AS(read_scores_csv((dir / "bad.csv").string()), Error);
  std::filesystem::remove_all(dir);
}
