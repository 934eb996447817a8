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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace til::nn {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;
  std::size_t size() const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  bool operator==(const Shape&) const = default;
};

enum class Padding { kValid, kSame };

struct ConvSpec {
  int out_c = 0;
  int k_h = 3;
  int k_w = 3;
  int stride = 1;
  Padding padding = Padding::kSame;
  bool relu = true;
};

enum class PoolKind { kMax, kAverage };

struct PoolSpec {
  PoolKind kind = PoolKind::kMax;
  int k = 2;
  int stride = 2;
  Padding padding = Padding::kValid;
};

struct GlobalAvgPoolSpec {};

struct DenseSpec {
  int out = 1;
  bool relu = false;
};

struct BranchSpec;
using LayerSpec =
    std::variant<ConvSpec, PoolSpec, GlobalAvgPoolSpec, DenseSpec, BranchSpec>;

/// Parallel sub-sequences over the same input whose outputs are concatenated
/// along channels (inception-style). All branches must agree on H x W.
struct BranchSpec {
  std::vector<std::vector<LayerSpec>> branches;
};

struct ArchitectureSpec {
  std::string name;
  Shape input;
  std::vector<LayerSpec> layers;  // must end in a 1-unit dense head
};

/// Per-call activation storage; lets one Network serve concurrent callers.
struct Workspace {
  std::vector<std::vector<double>> acts;
  std::vector<Workspace> children;
};

class Layer;

/// A feed-forward CNN ending in one logit. Parameters live outside the
/// network in a flat vector so optimizers and gradient checks can treat them
/// uniformly.
class Network {
 public:
  explicit Network(const ArchitectureSpec& spec);
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  const ArchitectureSpec& spec() const { return spec_; }
  Shape input_shape() const { return spec_.input; }
  Shape output_shape() const;
  std::size_t param_count() const;
  /// Shape after each top-level layer.
  std::vector<Shape> layer_shapes() const;

  /// He-normal weights, zero biases; deterministic in the seed.
  std::vector<double> init_params(std::uint64_t seed) const;

  double forward(std::span<const double> params, std::span<const double> input,
                 Workspace& ws) const;
  /// Backprop of d(loss)/d(logit) = grad_logit; accumulates into grad_params.
  void backward(std::span<const double> params, std::span<const double> input,
                double grad_logit, std::span<double> grad_params,
                Workspace& ws) const;

 private:
  ArchitectureSpec spec_;
  std::unique_ptr<Layer> root_;
};

double sigmoid(double z);
/// Binary cross-entropy of sigmoid(logit) against label, computed stably.
double bce_with_logit(double logit, int label);

/// Parameter count and output shape without allocating weights.
std::size_t count_params(const ArchitectureSpec& spec);

}  // namespace til::nn
