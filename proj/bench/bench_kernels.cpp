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

// Serial reference kernels against their OpenMP counterparts, plus whole-model
// scoring throughput.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "til/model.hpp"
#include "til/nn/kernels.hpp"
#include "til/synthetic.hpp"

namespace {

using til::kernels::ConvShape;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ConvShape conv_shape(const benchmark::State& state) {
  ConvShape s;
  s.in_c = static_cast<int>(state.range(0));
  s.out_c = static_cast<int>(state.range(1));
  s.in_h = s.in_w = static_cast<int>(state.range(2));
  s.k_h = s.k_w = 3;
  s.pad_h = s.pad_w = 1;
  return s;
}

struct ConvBuffers {
  explicit ConvBuffers(const ConvShape& s)
      : in(random_vector(static_cast<std::size_t>(s.in_c) * s.in_h * s.in_w, 1)),
        weight(random_vector(s.weight_count(), 2)),
        bias(random_vector(s.out_c, 3)),
        out(static_cast<std::size_t>(s.out_c) * s.out_h() * s.out_w()),
        grad_out(random_vector(out.size(), 4)),
        grad_in(in.size()),
        grad_weight(weight.size()),
        grad_bias(bias.size()) {}
  std::vector<double> in, weight, bias, out, grad_out, grad_in, grad_weight, grad_bias;
};

template <auto Kernel>
void BM_ConvForward(benchmark::State& state) {
  const ConvShape s = conv_shape(state);
  ConvBuffers b(s);
  for (auto _ : state) {
    Kernel(s, b.in, b.weight, b.bias, b.out);
    benchmark::DoNotOptimize(b.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(b.out.size()));
}

template <auto Kernel>
void BM_ConvBackward(benchmark::State& state) {
  const ConvShape s = conv_shape(state);
  ConvBuffers b(s);
  for (auto _ : state) {
    Kernel(s, b.in, b.weight, b.grad_out, b.grad_in, b.grad_weight, b.grad_bias);
    benchmark::DoNotOptimize(b.grad_weight.data());
  }
}

template <auto Kernel>
void BM_DenseForward(benchmark::State& state) {
  const int in_n = static_cast<int>(state.range(0)), out_n = static_cast<int>(state.range(1));
  const auto in = random_vector(in_n, 1), w = random_vector(static_cast<std::size_t>(in_n) * out_n, 2),
             bias = random_vector(out_n, 3);
  std::vector<double> out(out_n);
  for (auto _ : state) {
    Kernel(in_n, out_n, in, w, bias, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void BM_DenseBackward(benchmark::State& state) {
  const int in_n = static_cast<int>(state.range(0)), out_n = static_cast<int>(state.range(1));
  const auto in = random_vector(in_n, 1), w = random_vector(static_cast<std::size_t>(in_n) * out_n, 2),
             g = random_vector(out_n, 3);
  std::vector<double> gi(in_n), gw(w.size()), gb(out_n);
  for (auto _ : state) {
    Kernel(in_n, out_n, in, w, g, gi, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}

void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({3, 16, 64})->Args({16, 32, 32})->Args({64, 64, 16});
}

void dense_args(benchmark::internal::Benchmark* b) {
  b->Args({1024, 64})->Args({4096, 256});
}

namespace k = til::kernels;
BENCHMARK(BM_ConvForward<k::serial::conv2d_forward>)->Name("conv_forward/serial")->Apply(conv_args);
BENCHMARK(BM_ConvForward<k::omp::conv2d_forward>)->Name("conv_forward/omp")->Apply(conv_args);
BENCHMARK(BM_ConvBackward<k::serial::conv2d_backward>)->Name("conv_backward/serial")->Apply(conv_args);
BENCHMARK(BM_ConvBackward<k::omp::conv2d_backward>)->Name("conv_backward/omp")->Apply(conv_args);
BENCHMARK(BM_DenseForward<k::serial::dense_forward>)->Name("dense_forward/serial")->Apply(dense_args);
BENCHMARK(BM_DenseForward<k::omp::dense_forward>)->Name("dense_forward/omp")->Apply(dense_args);
BENCHMARK(BM_DenseBackward<k::serial::dense_backward>)->Name("dense_backward/serial")->Apply(dense_args);
BENCHMARK(BM_DenseBackward<k::omp::dense_backward>)->Name("dense_backward/omp")->Apply(dense_args);

void BM_ScorePatch(benchmark::State& state) {
  const til::ModelConfig cfg = til::default_config(til::Architecture::kCompactRef);
  const til::TrainedModel model(cfg, {}, til::nn::Network(til::architecture_spec(cfg.architecture)).init_params(1),
                                "bench");
  const til::RgbImage patch = til::synth::make_patch(100, true, 5);
  for (auto _ : state) benchmark::DoNotOptimize(model.score(patch));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ScorePatch)->Name("score_patch/compact");

}  // namespace

BENCHMARK_MAIN();
