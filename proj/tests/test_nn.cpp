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
#include <random>

#include "til/model.hpp"
#include "til/nn/architectures.hpp"
#include "til/nn/kernels.hpp"
#include "til/nn/network.hpp"

using namespace til;
namespace k = til::kernels;

namespace {

std::vector<double> randn(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12).scale(1.0));
  }
}

}  // namespace

TEST_CASE("omp conv kernels match the serial reference") {
  std::mt19937_64 rng(1);
  const k::ConvShape shapes[] = {
      {3, 17, 13, 5, 3, 3, 1, 1, 1},
      {4, 20, 20, 6, 3, 3, 2, 0, 0},
      {2, 9, 11, 3, 1, 7, 1, 0, 3},
      {2, 11, 9, 3, 7, 1, 1, 3, 0},
      {8, 64, 64, 16, 3, 3, 1, 1, 1},  // large enough to take the parallel path
  };
  for (const auto& s : shapes) {
    const auto in = randn(static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w, rng);
    const auto w = randn(s.weight_count(), rng);
    const auto b = randn(s.out_c, rng);
    const std::size_t out_n = static_cast<std::size_t>(s.out_c) * s.out_h() * s.out_w();
    std::vector<double> o1(out_n), o2(out_n);
    k::serial::conv2d_forward(s, in, w, b, o1);
    k::omp::conv2d_forward(s, in, w, b, o2);
    check_close(o1, o2);

    const auto g = randn(out_n, rng);
    std::vector<double> gi1(in.size()), gi2(in.size());
    std::vector<double> gw1(w.size(), 0.5), gw2(w.size(), 0.5);
    std::vector<double> gb1(b.size(), 0.25), gb2(b.size(), 0.25);
    k::serial::conv2d_backward(s, in, w, g, gi1, gw1, gb1);
    k::omp::conv2d_backward(s, in, w, g, gi2, gw2, gb2);
    check_close(gi1, gi2);
    check_close(gw1, gw2);
    check_close(gb1, gb2);
  }
}

TEST_CASE("serial conv against a direct definition") {
  std::mt19937_64 rng(2);
  k::ConvShape s{2, 5, 6, 3, 3, 3, 2, 1, 1};
  const auto in = randn(2 * 5 * 6, rng);
  const auto w = randn(s.weight_count(), rng);
  const auto b = randn(3, rng);
  std::vector<double> out(3 * s.out_h() * s.out_w());
  k::serial::conv2d_forward(s, in, w, b, out);
  for (int oc = 0; oc < 3; ++oc)
    for (int oy = 0; oy < s.out_h(); ++oy)
      for (int ox = 0; ox < s.out_w(); ++ox) {
        double acc = b[oc];
        for (int ic = 0; ic < 2; ++ic)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int y = oy * 2 - 1 + ky, x = ox * 2 - 1 + kx;
              if (y < 0 || y >= 5 || x < 0 || x >= 6) continue;
              acc += in[(ic * 5 + y) * 6 + x] * w[((oc * 2 + ic) * 3 + ky) * 3 + kx];
            }
        CHECK(out[(oc * s.out_h() + oy) * s.out_w() + ox] == doctest::Approx(acc));
      }
}

TEST_CASE("omp dense kernels match the serial reference") {
  std::mt19937_64 rng(3);
  for (auto [in_n, out_n] : {std::pair{7, 3}, std::pair{4096, 64}}) {
    const auto in = randn(in_n, rng);
    const auto w = randn(static_cast<std::size_t>(in_n) * out_n, rng);
    const auto b = randn(out_n, rng);
    std::vector<double> o1(out_n), o2(out_n);
    k::serial::dense_forward(in_n, out_n, in, w, b, o1);
    k::omp::dense_forward(in_n, out_n, in, w, b, o2);
    check_close(o1, o2);
    const auto g = randn(out_n, rng);
    std::vector<double> gi1(in_n), gi2(in_n), gw1(w.size()), gw2(w.size()), gb1(out_n), gb2(out_n);
    k::serial::dense_backward(in_n, out_n, in, w, g, gi1, gw1, gb1);
    k::omp::dense_backward(in_n, out_n, in, w, g, gi2, gw2, gb2);
    check_close(gi1, gi2);
    check_close(gw1, gw2);
    check_close(gb1, gb2);
  }
}

TEST_CASE("architecture shapes and sizes") {
  nn::Network compact(nn::compact_ref());
  CHECK(compact.input_shape() == nn::Shape{3, 64, 64});
  CHECK(compact.param_count() == 3729);

  const auto vgg = nn::vgg16_class();
  CHECK(vgg.input == nn::Shape{3, 224, 224});
  CHECK(nn::count_params(vgg) == 134264641);
  nn::Network vgg_net(vgg);
  const auto vs = vgg_net.layer_shapes();
  CHECK(vs.back() == nn::Shape{1, 1, 1});

  const auto inc = nn::inception_v4_class();
  CHECK(inc.input == nn::Shape{3, 299, 299});
  nn::Network inc_net(inc);
  const auto is = inc_net.layer_shapes();
  REQUIRE(is.size() >= 3);
  CHECK(is[is.size() - 3] == nn::Shape{1536, 8, 8});
  CHECK(is.back() == nn::Shape{1, 1, 1});
}

TEST_CASE("gradient matches central differences") {
  nn::Network net(nn::compact_ref());
  auto params = net.init_params(17);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<std::vector<double>> inputs(4, std::vector<double>(3 * 64 * 64));
  for (auto& x : inputs)
    for (auto& v : x) v = u(rng);
  std::vector<int> labels{0, 1, 1, 0};
  std::vector<double> grad(params.size());
  loss_and_gradient(net, params, inputs, labels, grad);

  std::vector<double> scratch(params.size());
  int checked = 0;
  for (std::size_t i = 0; i < params.size(); i += 37) {
    const double h = 1e-6;
    auto p = params;
    p[i] += h;
    const double up = loss_and_gradient(net, p, inputs, labels, scratch);
    p[i] -= 2 * h;
    const double down = loss_and_gradient(net, p, inputs, labels, scratch);
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-7});
    INFO("param " << i << " numeric " << numeric << " analytic " << grad[i]);
    CHECK(std::abs(numeric - grad[i]) / denom < 1e-3);
    ++checked;
  }
  CHECK(checked > 90);
}

TEST_CASE("gradient is independent of thread count") {
  nn::Network net(nn::compact_ref());
  const auto params = net.init_params(3);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<std::vector<double>> inputs(19, std::vector<double>(3 * 64 * 64));
  for (auto& x : inputs)
    for (auto& v : x) v = u(rng);
  std::vector<int> labels(19);
  for (int i = 0; i < 19; ++i) labels[i] = i % 3 == 0;
  std::vector<double> g1(params.size()), g2(params.size());
  const double l1 = loss_and_gradient(net, params, inputs, labels, g1);
  const double l2 = loss_and_gradient(net, params, inputs, labels, g2);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("bce with logit is stable") {
  CHECK(nn::bce_with_logit(0.0, 1) == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(nn::bce_with_logit(800.0, 0)));
  CHECK(nn::bce_with_logit(800.0, 0) == doctest::Approx(800.0));
  CHECK(nn::bce_with_logit(-800.0, 0) == doctest::Approx(0.0));
  CHECK(nn::sigmoid(-800.0) >= 0.0);
  CHECK(nn::sigmoid(800.0) <= 1.0);
}
