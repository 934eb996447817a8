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

#include "til/nn/architectures.hpp"

namespace til::nn {

namespace {

// Asymmetric (k_h x k_w) stride-1 same-padded convolution.
ConvSpec conv_hw(int out_c, int k_h, int k_w) {
  return ConvSpec{out_c, k_h, k_w, 1, Padding::kSame, true};
}
ConvSpec conv(int out_c, int k, int stride = 1, Padding padding = Padding::kSame) {
  return ConvSpec{out_c, k, k, stride, padding, true};
}

PoolSpec max_pool(int k, int stride, Padding padding = Padding::kValid) {
  return PoolSpec{PoolKind::kMax, k, stride, padding};
}
PoolSpec avg_pool_same3() { return PoolSpec{PoolKind::kAverage, 3, 1, Padding::kSame}; }

constexpr Padding kValid = Padding::kValid;

std::vector<LayerSpec> stem() {
  std::vector<LayerSpec> s = {
      conv(32, 3, 2, kValid),  // 149 x 149
      conv(32, 3, 1, kValid),  // 147 x 147
      conv(64, 3),             // 147 x 147
  };
  s.push_back(BranchSpec{{{max_pool(3, 2)}, {conv(96, 3, 2, kValid)}}});  // 73 x 73 x 160
  s.push_back(BranchSpec{{
      {conv(64, 1), conv(96, 3, 1, kValid)},
      {conv(64, 1), conv_hw(64, 7, 1), conv_hw(64, 1, 7), conv(96, 3, 1, kValid)},
  }});  // 71 x 71 x 192
  s.push_back(BranchSpec{{{conv(192, 3, 2, kValid)}, {max_pool(3, 2)}}});  // 35 x 35 x 384
  return s;
}

LayerSpec inception_a() {
  return BranchSpec{{
      {avg_pool_same3(), conv(96, 1)},
      {conv(96, 1)},
      {conv(64, 1), conv(96, 3)},
      {conv(64, 1), conv(96, 3), conv(96, 3)},
  }};
}

LayerSpec reduction_a() {
  return BranchSpec{{
      {max_pool(3, 2)},
      {conv(384, 3, 2, kValid)},
      {conv(192, 1), conv(224, 3), conv(256, 3, 2, kValid)},
  }};
}

LayerSpec inception_b() {
  return BranchSpec{{
      {avg_pool_same3(), conv(128, 1)},
      {conv(384, 1)},
      {conv(192, 1), conv_hw(224, 1, 7), conv_hw(256, 7, 1)},
      {conv(192, 1), conv_hw(192, 1, 7), conv_hw(224, 7, 1), conv_hw(224, 1, 7),
       conv_hw(256, 7, 1)},
  }};
}

LayerSpec reduction_b() {
  return BranchSpec{{
      {max_pool(3, 2)},
      {conv(192, 1), conv(192, 3, 2, kValid)},
      {conv(256, 1), conv_hw(256, 1, 7), conv_hw(320, 7, 1), conv(320, 3, 2, kValid)},
  }};
}

LayerSpec inception_c() {
  const LayerSpec split = BranchSpec{{{conv_hw(256, 1, 3)}, {conv_hw(256, 3, 1)}}};
  return BranchSpec{{
      {avg_pool_same3(), conv(256, 1)},
      {conv(256, 1)},
      {conv(384, 1), split},
      {conv(384, 1), conv_hw(448, 1, 3), conv_hw(512, 3, 1), split},
  }};
}

}  // namespace

ArchitectureSpec vgg16_class() {
  ArchitectureSpec a{"VGG16_CLASS", {3, 224, 224}, {}};
  for (int block : {64, 128, 256, 512, 512}) {
    const int reps = block <= 128 ? 2 : 3;
    for (int i = 0; i < reps; ++i) a.layers.push_back(conv(block, 3));
    a.layers.push_back(max_pool(2, 2));
  }
  a.layers.push_back(DenseSpec{4096, true});
  a.layers.push_back(DenseSpec{4096, true});
  a.layers.push_back(DenseSpec{1, false});
  return a;
}

ArchitectureSpec inception_v4_class() {
  ArchitectureSpec a{"INCEPTION_V4_CLASS", {3, 299, 299}, stem()};
  for (int i = 0; i < 4; ++i) a.layers.push_back(inception_a());
  a.layers.push_back(reduction_a());
  for (int i = 0; i < 7; ++i) a.layers.push_back(inception_b());
  a.layers.push_back(reduction_b());
  for (int i = 0; i < 3; ++i) a.layers.push_back(inception_c());
  a.layers.push_back(GlobalAvgPoolSpec{});
  a.layers.push_back(DenseSpec{1, false});
  return a;
}

ArchitectureSpec compact_ref() {
  return ArchitectureSpec{
      "COMPACT_REF",
      {3, 64, 64},
      {conv(8, 3), max_pool(2, 2), conv(16, 3), max_pool(2, 2), conv(16, 3),
       GlobalAvgPoolSpec{}, DenseSpec{1, false}},
  };
}

}  // namespace til::nn
