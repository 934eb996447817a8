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

#include "til/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "til/error.hpp"
#include "til/nn/kernels.hpp"

namespace til::nn {

class Layer {
 public:
  explicit Layer(std::size_t offset) : offset_(offset) {}
  virtual ~Layer() = default;
  virtual Shape output_shape() const = 0;
  virtual std::size_t param_count() const { return 0; }
  virtual void init(std::span<double>, std::mt19937_64&) const {}
  virtual void forward(std::span<const double> params,
                       std::span<const double> in, std::span<double> out,
                       Workspace& ws) const = 0;
  virtual void backward(std::span<const double> params,
                        std::span<const double> in, std::span<const double> out,
                        std::span<const double> grad_out,
                        std::span<double> grad_in,
                        std::span<double> grad_params, Workspace& ws) const = 0;

 protected:
  std::size_t offset_;
};

namespace {

void ensure_size(std::vector<double>& v, std::size_t n) {
  if (v.size() != n) v.assign(n, 0.0);
}

int same_pad(int k) { return (k - 1) / 2; }

void he_normal(std::span<double> w, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (double& x : w) x = dist(rng);
}

class ConvLayer final : public Layer {
 public:
  ConvLayer(Shape in, const ConvSpec& spec, std::size_t offset)
      : Layer(offset), relu_(spec.relu) {
    if (spec.out_c <= 0 || spec.k_h <= 0 || spec.k_w <= 0 || spec.stride <= 0) {
      fail(ErrorCode::kInvalidArgument, "bad convolution spec");
    }
    s_.in_c = in.c;
    s_.in_h = in.h;
    s_.in_w = in.w;
    s_.out_c = spec.out_c;
    s_.k_h = spec.k_h;
    s_.k_w = spec.k_w;
    s_.stride = spec.stride;
    if (spec.padding == Padding::kSame) {
      s_.pad_h = same_pad(spec.k_h);
      s_.pad_w = same_pad(spec.k_w);
    }
    if (s_.out_h() <= 0 || s_.out_w() <= 0) {
      fail(ErrorCode::kInvalidArgument, "convolution input too small");
    }
  }

  Shape output_shape() const override { return {s_.out_c, s_.out_h(), s_.out_w()}; }
  std::size_t param_count() const override { return s_.weight_count() + s_.out_c; }

  void init(std::span<double> params, std::mt19937_64& rng) const override {
    auto w = params.subspan(offset_, s_.weight_count());
    he_normal(w, s_.in_c * s_.k_h * s_.k_w, rng);
    auto b = params.subspan(offset_ + s_.weight_count(), s_.out_c);
    std::fill(b.begin(), b.end(), 0.0);
  }

  void forward(std::span<const double> params, std::span<const double> in,
               std::span<double> out, Workspace&) const override {
    kernels::omp::conv2d_forward(s_, in, weights(params), bias(params), out);
    if (relu_) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
  }

  void backward(std::span<const double> params, std::span<const double> in,
                std::span<const double> out, std::span<const double> grad_out,
                std::span<double> grad_in, std::span<double> grad_params,
                Workspace& ws) const override {
    std::span<const double> g = grad_out;
    if (relu_) {
      ws.acts.resize(1);
      ensure_size(ws.acts[0], grad_out.size());
      auto& masked = ws.acts[0];
      for (std::size_t i = 0; i < masked.size(); ++i) {
        masked[i] = out[i] > 0.0 ? grad_out[i] : 0.0;
      }
      g = masked;
    }
    kernels::omp::conv2d_backward(
        s_, in, weights(params), g, grad_in,
        grad_params.subspan(offset_, s_.weight_count()),
        grad_params.subspan(offset_ + s_.weight_count(), s_.out_c));
  }

 private:
  std::span<const double> weights(std::span<const double> p) const {
    return p.subspan(offset_, s_.weight_count());
  }
  std::span<const double> bias(std::span<const double> p) const {
    return p.subspan(offset_ + s_.weight_count(), s_.out_c);
  }

  kernels::ConvShape s_;
  bool relu_;
};

class PoolLayer final : public Layer {
 public:
  PoolLayer(Shape in, const PoolSpec& spec)
      : Layer(0), in_(in), spec_(spec),
        pad_(spec.padding == Padding::kSame ? same_pad(spec.k) : 0) {
    if (spec.k <= 0 || spec.stride <= 0) {
      fail(ErrorCode::kInvalidArgument, "bad pooling spec");
    }
    out_ = {in.c, (in.h + 2 * pad_ - spec.k) / spec.stride + 1,
            (in.w + 2 * pad_ - spec.k) / spec.stride + 1};
    if (out_.h <= 0 || out_.w <= 0) {
      fail(ErrorCode::kInvalidArgument, "pooling input too small");
    }
  }

  Shape output_shape() const override { return out_; }

  void forward(std::span<const double>, std::span<const double> in,
               std::span<double> out, Workspace&) const override {
    for (int c = 0; c < in_.c; ++c) {
      for (int oy = 0; oy < out_.h; ++oy) {
        for (int ox = 0; ox < out_.w; ++ox) {
          double acc = spec_.kind == PoolKind::kMax
                           ? -std::numeric_limits<double>::infinity()
                           : 0.0;
          int count = 0;
          visit_window(c, oy, ox, [&](std::size_t idx) {
            if (spec_.kind == PoolKind::kMax) {
              acc = std::max(acc, in[idx]);
            } else {
              acc += in[idx];
            }
            ++count;
          });
          out[out_index(c, oy, ox)] =
              spec_.kind == PoolKind::kMax ? acc : acc / count;
        }
      }
    }
  }

  void backward(std::span<const double>, std::span<const double> in,
                std::span<const double> out, std::span<const double> grad_out,
                std::span<double> grad_in, std::span<double>,
                Workspace&) const override {
    if (grad_in.empty()) return;
    std::fill(grad_in.begin(), grad_in.end(), 0.0);
    for (int c = 0; c < in_.c; ++c) {
      for (int oy = 0; oy < out_.h; ++oy) {
        for (int ox = 0; ox < out_.w; ++ox) {
          const std::size_t o = out_index(c, oy, ox);
          const double g = grad_out[o];
          if (spec_.kind == PoolKind::kMax) {
            // Route to the first maximal element.
            bool routed = false;
            visit_window(c, oy, ox, [&](std::size_t idx) {
              if (!routed && in[idx] == out[o]) {
                grad_in[idx] += g;
                routed = true;
              }
            });
          } else {
            int count = 0;
            visit_window(c, oy, ox, [&](std::size_t) { ++count; });
            visit_window(c, oy, ox,
                         [&](std::size_t idx) { grad_in[idx] += g / count; });
          }
        }
      }
    }
  }

 private:
  std::size_t out_index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * out_.h + y) * out_.w + x;
  }

  template <typename F>
  void visit_window(int c, int oy, int ox, F&& f) const {
    for (int ky = 0; ky < spec_.k; ++ky) {
      const int iy = oy * spec_.stride + ky - pad_;
      if (iy < 0 || iy >= in_.h) continue;
      for (int kx = 0; kx < spec_.k; ++kx) {
        const int ix = ox * spec_.stride + kx - pad_;
        if (ix < 0 || ix >= in_.w) continue;
        f((static_cast<std::size_t>(c) * in_.h + iy) * in_.w + ix);
      }
    }
  }

  Shape in_;
  Shape out_;
  PoolSpec spec_;
  int pad_;
};

class GlobalAvgPoolLayer final : public Layer {
 public:
  explicit GlobalAvgPoolLayer(Shape in) : Layer(0), in_(in) {}
  Shape output_shape() const override { return {in_.c, 1, 1}; }

  void forward(std::span<const double>, std::span<const double> in,
               std::span<double> out, Workspace&) const override {
    const std::size_t plane = static_cast<std::size_t>(in_.h) * in_.w;
    for (int c = 0; c < in_.c; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += in[c * plane + i];
      out[c] = acc / static_cast<double>(plane);
    }
  }

  void backward(std::span<const double>, std::span<const double>,
                std::span<const double>, std::span<const double> grad_out,
                std::span<double> grad_in, std::span<double>,
                Workspace&) const override {
    if (grad_in.empty()) return;
    const std::size_t plane = static_cast<std::size_t>(in_.h) * in_.w;
    for (int c = 0; c < in_.c; ++c) {
      const double g = grad_out[c] / static_cast<double>(plane);
      std::fill_n(grad_in.begin() + static_cast<std::ptrdiff_t>(c * plane),
                  plane, g);
    }
  }

 private:
  Shape in_;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(Shape in, const DenseSpec& spec, std::size_t offset)
      : Layer(offset), in_n_(static_cast<int>(in.size())), out_n_(spec.out),
        relu_(spec.relu) {
    if (spec.out <= 0) fail(ErrorCode::kInvalidArgument, "bad dense spec");
  }

  Shape output_shape() const override { return {out_n_, 1, 1}; }
  std::size_t param_count() const override { return weight_count() + out_n_; }

  void init(std::span<double> params, std::mt19937_64& rng) const override {
    he_normal(params.subspan(offset_, weight_count()), in_n_, rng);
    auto b = params.subspan(offset_ + weight_count(), out_n_);
    std::fill(b.begin(), b.end(), 0.0);
  }

  void forward(std::span<const double> params, std::span<const double> in,
               std::span<double> out, Workspace&) const override {
    kernels::omp::dense_forward(in_n_, out_n_, in,
                                params.subspan(offset_, weight_count()),
                                params.subspan(offset_ + weight_count(), out_n_),
                                out);
    if (relu_) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
  }

  void backward(std::span<const double> params, std::span<const double> in,
                std::span<const double> out, std::span<const double> grad_out,
                std::span<double> grad_in, std::span<double> grad_params,
                Workspace& ws) const override {
    std::span<const double> g = grad_out;
    if (relu_) {
      ws.acts.resize(1);
      ensure_size(ws.acts[0], grad_out.size());
      for (std::size_t i = 0; i < grad_out.size(); ++i) {
        ws.acts[0][i] = out[i] > 0.0 ? grad_out[i] : 0.0;
      }
      g = ws.acts[0];
    }
    kernels::omp::dense_backward(
        in_n_, out_n_, in, params.subspan(offset_, weight_count()), g, grad_in,
        grad_params.subspan(offset_, weight_count()),
        grad_params.subspan(offset_ + weight_count(), out_n_));
  }

 private:
  std::size_t weight_count() const {
    return static_cast<std::size_t>(in_n_) * out_n_;
  }
  int in_n_;
  int out_n_;
  bool relu_;
};

std::unique_ptr<Layer> build_sequence(Shape in, const std::vector<LayerSpec>& specs,
                                      std::size_t& offset);

class SequentialLayer final : public Layer {
 public:
  SequentialLayer(Shape in, std::vector<std::unique_ptr<Layer>> layers)
      : Layer(0), in_(in), layers_(std::move(layers)) {
    if (layers_.empty()) fail(ErrorCode::kInvalidArgument, "empty layer sequence");
  }

  Shape output_shape() const override { return layers_.back()->output_shape(); }
  std::size_t param_count() const override {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l->param_count();
    return n;
  }
  void init(std::span<double> params, std::mt19937_64& rng) const override {
    for (const auto& l : layers_) l->init(params, rng);
  }

  std::vector<Shape> shapes() const {
    std::vector<Shape> s;
    for (const auto& l : layers_) s.push_back(l->output_shape());
    return s;
  }

  void forward(std::span<const double> params, std::span<const double> in,
               std::span<double> out, Workspace& ws) const override {
    const std::size_t n = layers_.size();
    ws.acts.resize(n + 2);
    ws.children.resize(n);
    std::span<const double> cur = in;
    for (std::size_t i = 0; i < n; ++i) {
      ensure_size(ws.acts[i], layers_[i]->output_shape().size());
      layers_[i]->forward(params, cur, ws.acts[i], ws.children[i]);
      cur = ws.acts[i];
    }
    std::copy(cur.begin(), cur.end(), out.begin());
  }

  void backward(std::span<const double> params, std::span<const double> in,
                std::span<const double>, std::span<const double> grad_out,
                std::span<double> grad_in, std::span<double> grad_params,
                Workspace& ws) const override {
    const std::size_t n = layers_.size();
    std::vector<double>* ping = &ws.acts[n];
    std::vector<double>* pong = &ws.acts[n + 1];
    std::span<const double> g = grad_out;
    for (std::size_t i = n; i-- > 0;) {
      std::span<const double> layer_in =
          i == 0 ? in : std::span<const double>(ws.acts[i - 1]);
      std::span<double> layer_grad_in;
      if (i > 0) {
        ensure_size(*ping, layer_in.size());
        layer_grad_in = *ping;
      } else {
        layer_grad_in = grad_in;
      }
      layers_[i]->backward(params, layer_in, ws.acts[i], g, layer_grad_in,
                           grad_params, ws.children[i]);
      if (i > 0) {
        g = *ping;
        std::swap(ping, pong);
      }
    }
  }

 private:
  Shape in_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

class BranchLayer final : public Layer {
 public:
  BranchLayer(Shape in, const BranchSpec& spec, std::size_t& offset)
      : Layer(0), in_(in) {
    if (spec.branches.empty()) fail(ErrorCode::kInvalidArgument, "empty branch");
    for (const auto& b : spec.branches) {
      branches_.push_back(build_sequence(in, b, offset));
    }
    out_ = branches_.front()->output_shape();
    out_.c = 0;
    for (const auto& b : branches_) {
      const Shape s = b->output_shape();
      if (s.h != out_.h || s.w != out_.w) {
        fail(ErrorCode::kInvalidArgument, "branch outputs disagree on H x W");
      }
      out_.c += s.c;
    }
  }

  Shape output_shape() const override { return out_; }
  std::size_t param_count() const override {
    std::size_t n = 0;
    for (const auto& b : branches_) n += b->param_count();
    return n;
  }
  void init(std::span<double> params, std::mt19937_64& rng) const override {
    for (const auto& b : branches_) b->init(params, rng);
  }

  void forward(std::span<const double> params, std::span<const double> in,
               std::span<double> out, Workspace& ws) const override {
    const std::size_t nb = branches_.size();
    ws.acts.resize(nb + 1);
    ws.children.resize(nb);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t len = branches_[b]->output_shape().size();
      branches_[b]->forward(params, in, out.subspan(pos, len), ws.children[b]);
      pos += len;
    }
  }

  void backward(std::span<const double> params, std::span<const double> in,
                std::span<const double> out, std::span<const double> grad_out,
                std::span<double> grad_in, std::span<double> grad_params,
                Workspace& ws) const override {
    const std::size_t nb = branches_.size();
    auto& scratch = ws.acts[nb];
    if (!grad_in.empty()) {
      std::fill(grad_in.begin(), grad_in.end(), 0.0);
      ensure_size(scratch, in.size());
    }
    std::size_t pos = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t len = branches_[b]->output_shape().size();
      std::span<double> gb;
      if (!grad_in.empty()) gb = scratch;
      branches_[b]->backward(params, in, out.subspan(pos, len),
                             grad_out.subspan(pos, len), gb, grad_params,
                             ws.children[b]);
      if (!grad_in.empty()) {
        for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in[i] += scratch[i];
      }
      pos += len;
    }
  }

 private:
  Shape in_;
  Shape out_;
  std::vector<std::unique_ptr<Layer>> branches_;
};

std::unique_ptr<Layer> build_sequence(Shape in, const std::vector<LayerSpec>& specs,
                                      std::size_t& offset) {
  std::vector<std::unique_ptr<Layer>> layers;
  Shape cur = in;
  for (const auto& spec : specs) {
    std::unique_ptr<Layer> layer = std::visit(
        [&](const auto& s) -> std::unique_ptr<Layer> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ConvSpec>) {
            return std::make_unique<ConvLayer>(cur, s, offset);
          } else if constexpr (std::is_same_v<T, PoolSpec>) {
            return std::make_unique<PoolLayer>(cur, s);
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolSpec>) {
            return std::make_unique<GlobalAvgPoolLayer>(cur);
          } else if constexpr (std::is_same_v<T, DenseSpec>) {
            return std::make_unique<DenseLayer>(cur, s, offset);
          } else {
            return std::make_unique<BranchLayer>(cur, s, offset);
          }
        },
        spec);
    // Branch layers advance the offset themselves while building.
    if (!std::holds_alternative<BranchSpec>(spec)) offset += layer->param_count();
    cur = layer->output_shape();
    layers.push_back(std::move(layer));
  }
  return std::make_unique<SequentialLayer>(in, std::move(layers));
}

}  // namespace

Network::Network(const ArchitectureSpec& spec) : spec_(spec) {
  if (spec.input.size() == 0) {
    fail(ErrorCode::kInvalidArgument, "network input shape is empty");
  }
  std::size_t offset = 0;
  root_ = build_sequence(spec.input, spec.layers, offset);
  if (root_->output_shape().size() != 1) {
    fail(ErrorCode::kInvalidArgument,
         "architecture " + spec.name + " must end in a single output unit");
  }
}

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

Shape Network::output_shape() const { return root_->output_shape(); }
std::size_t Network::param_count() const { return root_->param_count(); }

std::vector<Shape> Network::layer_shapes() const {
  return static_cast<const SequentialLayer&>(*root_).shapes();
}

std::vector<double> Network::init_params(std::uint64_t seed) const {
  std::vector<double> params(param_count(), 0.0);
  std::mt19937_64 rng(seed);
  root_->init(params, rng);
  return params;
}

double Network::forward(std::span<const double> params,
                        std::span<const double> input, Workspace& ws) const {
  if (input.size() != spec_.input.size()) {
    fail(ErrorCode::kModelMismatch, "input tensor size does not match network");
  }
  double logit = 0.0;
  root_->forward(params, input, std::span<double>(&logit, 1), ws);
  return logit;
}

void Network::backward(std::span<const double> params,
                       std::span<const double> input, double grad_logit,
                       std::span<double> grad_params, Workspace& ws) const {
  // `ws` must hold the activations of the matching forward call.
  const double out = 0.0;
  root_->backward(params, input, std::span<const double>(&out, 1),
                  std::span<const double>(&grad_logit, 1), {}, grad_params, ws);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logit(double logit, int label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

std::size_t count_params(const ArchitectureSpec& spec) {
  return Network(spec).param_count();
}

}  // namespace til::nn
