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

#include "til/nn/network.hpp"

namespace til::nn {

/// VGG-16 feature stack (13 3x3 convolutions, 5 max-pools), two 4096-unit
/// fully connected layers and a single-logit head. 224 x 224 input.
ArchitectureSpec vgg16_class();

/// Inception-v4 topology (stem, 4x A, reduction A, 7x B, reduction B, 3x C)
/// with plain conv + bias + ReLU units, global average pooling and a
/// single-logit head. 299 x 299 input.
ArchitectureSpec inception_v4_class();

/// Three 3x3 conv blocks, global average pooling and a single-logit head on
/// 64 x 64 input. Small enough to train on a CPU in seconds.
ArchitectureSpec compact_ref();

}  // namespace til::nn
