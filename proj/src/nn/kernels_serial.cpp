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

#include "til/nn/kernels.hpp"

#include <algorithm>

namespace til::kernels::serial {

void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> out) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < s.in_c; ++ic) {
          for (int ky = 0; ky < s.k_h; ++ky) {
            const int iy = oy * s.stride + ky - s.pad_h;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int kx = 0; kx < s.k_w; ++kx) {
              const int ix = ox * s.stride + kx - s.pad_w;
              if (ix < 0 || ix >= s.in_w) continue;
              acc += weight[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx] *
                     in[(static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w + ix];
            }
          }
        }
        out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_in,
                     std::span<double> grad_weight, std::span<double> grad_bias) {
  const int oh = s.out_h(), ow = s.out_w();
  if (!grad_in.empty()) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = grad_out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
        grad_bias[oc] += g;
        for (int ic = 0; ic < s.in_c; ++ic) {
          for (int ky = 0; ky < s.k_h; ++ky) {
            const int iy = oy * s.stride + ky - s.pad_h;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int kx = 0; kx < s.k_w; ++kx) {
              const int ix = ox * s.stride + kx - s.pad_w;
              if (ix < 0 || ix >= s.in_w) continue;
              const std::size_t wi =
                  ((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx;
              const std::size_t ii = (static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w + ix;
              grad_weight[wi] += g * in[ii];
              if (!grad_in.empty()) grad_in[ii] += g * weight[wi];
            }
          }
        }
      }
    }
  }
}

void dense_forward(int in_n, int out_n, std::span<const double> in,
                   std::span<const double> weight, std::span<const double> bias,
                   std::span<double> out) {
  for (int o = 0; o < out_n; ++o) {
    double acc = bias[o];
    for (int i = 0; i < in_n; ++i) {
      acc += weight[static_cast<std::size_t>(o) * in_n + i] * in[i];
    }
    out[o] = acc;
  }
}

void dense_backward(int in_n, int out_n, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> grad_out, std::span<double> grad_in,
                    std::span<double> grad_weight, std::span<double> grad_bias) {
  if (!grad_in.empty()) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (int o = 0; o < out_n; ++o) {
    const double g = grad_out[o];
    grad_bias[o] += g;
    for (int i = 0; i < in_n; ++i) {
      grad_weight[static_cast<std::size_t>(o) * in_n + i] += g * in[i];
      if (!grad_in.empty()) {
        grad_in[i] += g * weight[static_cast<std::size_t>(o) * in_n + i];
      }
    }
  }
}

}  // namespace til::kernels::serial
