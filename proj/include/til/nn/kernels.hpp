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

// Compute kernels for the patch classifier. Every kernel exists twice with
// identical signatures: `serial` is the straightforward reference used by the
// tests, `omp` is the OpenMP-parallel version the network runs. Tensors are
// single-sample CHW, row-major, double precision.

#include <span>

namespace til::kernels {

struct ConvShape {
  int in_c = 0;
  int in_h = 0;
  int in_w = 0;
  int out_c = 0;
  int k_h = 1;
  int k_w = 1;
  int stride = 1;
  int pad_h = 0;
  int pad_w = 0;

  int out_h() const { return (in_h + 2 * pad_h - k_h) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad_w - k_w) / stride + 1; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_c) * in_c * k_h * k_w;
  }
};

// Weights are laid out [out_c][in_c][k_h][k_w]; bias [out_c].
// Backward kernels accumulate into grad_weight/grad_bias and overwrite
// grad_in (skipped when grad_in is empty).

namespace serial {
void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> out);
void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_in,
                     std::span<double> grad_weight, std::span<double> grad_bias);
// Weights [out][in].
void dense_forward(int in_n, int out_n, std::span<const double> in,
                   std::span<const double> weight, std::span<const double> bias,
                   std::span<double> out);
void dense_backward(int in_n, int out_n, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> grad_out, std::span<double> grad_in,
                    std::span<double> grad_weight, std::span<double> grad_bias);
}  // namespace serial

namespace omp {
void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> out);
void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_in,
                     std::span<double> grad_weight, std::span<double> grad_bias);
void dense_forward(int in_n, int out_n, std::span<const double> in,
                   std::span<const double> weight, std::span<const double> bias,
                   std::span<double> out);
void dense_backward(int in_n, int out_n, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> grad_out, std::span<double> grad_in,
                    std::span<double> grad_weight, std::span<double> grad_bias);
}  // namespace omp

}  // namespace til::kernels
