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

#include <algorithm>
#include <cstddef>

#include "til/nn/kernels.hpp"

namespace til::kernels::omp {

namespace {

// Parallel regions below this many multiply-adds are not worth the fork.
constexpr std::size_t kMinParallelWork = 1 << 16;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Output indices o in [lo, hi) whose input coordinate o*stride + k - pad
// falls inside [0, extent).
struct Range {
  int lo;
  int hi;
};

Range valid_range(int k, int pad, int stride, int extent, int out_extent) {
  const int lo = std::max(0, ceil_div(pad - k, stride));
  const int hi = std::min(out_extent, floor_div(extent - 1 + pad - k, stride) + 1);
  return {lo, std::max(lo, hi)};
}

}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> out) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  const std::size_t work = plane * s.weight_count();
  const double* ip = in.data();
  const double* wp = weight.data();
  double* op = out.data();

#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int oc = 0; oc < s.out_c; ++oc) {
    double* o = op + oc * plane;
    std::fill(o, o + plane, bias[oc]);
    for (int ic = 0; ic < s.in_c; ++ic) {
      const double* ichan = ip + static_cast<std::size_t>(ic) * s.in_h * s.in_w;
      for (int ky = 0; ky < s.k_h; ++ky) {
        const Range ry = valid_range(ky, s.pad_h, s.stride, s.in_h, oh);
        for (int kx = 0; kx < s.k_w; ++kx) {
          const Range rx = valid_range(kx, s.pad_w, s.stride, s.in_w, ow);
          const double w =
              wp[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx];
          for (int oy = ry.lo; oy < ry.hi; ++oy) {
            const double* irow = ichan + static_cast<std::size_t>(oy * s.stride + ky - s.pad_h) * s.in_w;
            double* orow = o + static_cast<std::size_t>(oy) * ow;
            if (s.stride == 1) {
              const double* src = irow + kx - s.pad_w;
              for (int ox = rx.lo; ox < rx.hi; ++ox) orow[ox] += w * src[ox];
            } else {
              for (int ox = rx.lo; ox < rx.hi; ++ox) {
                orow[ox] += w * irow[ox * s.stride + kx - s.pad_w];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_in,
                     std::span<double> grad_weight, std::span<double> grad_bias) {
  const int oh = s.out_h(), ow = s.out_w();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  const std::size_t in_plane = static_cast<std::size_t>(s.in_h) * s.in_w;
  const std::size_t work = plane * s.weight_count();
  const double* ip = in.data();
  const double* gp = grad_out.data();
  const double* wp = weight.data();

  // Weight and bias gradients: each output channel owns its slice.
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int oc = 0; oc < s.out_c; ++oc) {
    const double* g = gp + oc * plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) bsum += g[i];
    grad_bias[oc] += bsum;
    for (int ic = 0; ic < s.in_c; ++ic) {
      const double* ichan = ip + ic * in_plane;
      for (int ky = 0; ky < s.k_h; ++ky) {
        const Range ry = valid_range(ky, s.pad_h, s.stride, s.in_h, oh);
        for (int kx = 0; kx < s.k_w; ++kx) {
          const Range rx = valid_range(kx, s.pad_w, s.stride, s.in_w, ow);
          double acc = 0.0;
          for (int oy = ry.lo; oy < ry.hi; ++oy) {
            const double* irow = ichan + static_cast<std::size_t>(oy * s.stride + ky - s.pad_h) * s.in_w;
            const double* grow = g + static_cast<std::size_t>(oy) * ow;
            if (s.stride == 1) {
              const double* src = irow + kx - s.pad_w;
              for (int ox = rx.lo; ox < rx.hi; ++ox) acc += grow[ox] * src[ox];
            } else {
              for (int ox = rx.lo; ox < rx.hi; ++ox) {
                acc += grow[ox] * irow[ox * s.stride + kx - s.pad_w];
              }
            }
          }
          grad_weight[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx] += acc;
        }
      }
    }
  }

  if (grad_in.empty()) return;
  double* gin = grad_in.data();
  // Input gradient: each input channel owns its plane.
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int ic = 0; ic < s.in_c; ++ic) {
    double* gchan = gin + ic * in_plane;
    std::fill(gchan, gchan + in_plane, 0.0);
    for (int oc = 0; oc < s.out_c; ++oc) {
      const double* g = gp + oc * plane;
      for (int ky = 0; ky < s.k_h; ++ky) {
        const Range ry = valid_range(ky, s.pad_h, s.stride, s.in_h, oh);
        for (int kx = 0; kx < s.k_w; ++kx) {
          const Range rx = valid_range(kx, s.pad_w, s.stride, s.in_w, ow);
          const double w =
              wp[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx];
          for (int oy = ry.lo; oy < ry.hi; ++oy) {
            double* irow = gchan + static_cast<std::size_t>(oy * s.stride + ky - s.pad_h) * s.in_w;
            const double* grow = g + static_cast<std::size_t>(oy) * ow;
            if (s.stride == 1) {
              double* dst = irow + kx - s.pad_w;
              for (int ox = rx.lo; ox < rx.hi; ++ox) dst[ox] += w * grow[ox];
            } else {
              for (int ox = rx.lo; ox < rx.hi; ++ox) {
                irow[ox * s.stride + kx - s.pad_w] += w * grow[ox];
              }
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
  const std::size_t work = static_cast<std::size_t>(in_n) * out_n;
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int o = 0; o < out_n; ++o) {
    const double* w = weight.data() + static_cast<std::size_t>(o) * in_n;
    double acc = 0.0;
    for (int i = 0; i < in_n; ++i) acc += w[i] * in[i];
    out[o] = bias[o] + acc;
  }
}

void dense_backward(int in_n, int out_n, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> grad_out, std::span<double> grad_in,
                    std::span<double> grad_weight, std::span<double> grad_bias) {
  const std::size_t work = static_cast<std::size_t>(in_n) * out_n;
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int o = 0; o < out_n; ++o) {
    const double g = grad_out[o];
    grad_bias[o] += g;
    double* gw = grad_weight.data() + static_cast<std::size_t>(o) * in_n;
    for (int i = 0; i < in_n; ++i) gw[i] += g * in[i];
  }
  if (grad_in.empty()) return;
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int i = 0; i < in_n; ++i) {
    double acc = 0.0;
    for (int o = 0; o < out_n; ++o) {
      acc += grad_out[o] * weight[static_cast<std::size_t>(o) * in_n + i];
    }
    grad_in[i] = acc;
  }
}

}  // namespace til::kernels::omp
