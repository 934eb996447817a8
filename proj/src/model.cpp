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

#include "til/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "til/error.hpp"
#include "til/nn/architectures.hpp"

namespace til {

using nlohmann::json;

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kVgg16Class: return "VGG16_CLASS";
    case Architecture::kInceptionV4Class: return "INCEPTION_V4_CLASS";
    case Architecture::kCompactRef: return "COMPACT_REF";
  }
  return "COMPACT_REF";
}

Architecture parse_architecture(std::string_view text) {
  if (text == "VGG16_CLASS" || text == "vgg16") return Architecture::kVgg16Class;
  if (text == "INCEPTION_V4_CLASS" || text == "inception-v4") {
    return Architecture::kInceptionV4Class;
  }
  if (text == "COMPACT_REF" || text == "compact-ref") return Architecture::kCompactRef;
  fail(ErrorCode::kInvalidArgument, "unknown architecture '" + std::string(text) + "'");
}

int required_input_px(Architecture arch) {
  switch (arch) {
    case Architecture::kVgg16Class: return 224;
    case Architecture::kInceptionV4Class: return 299;
    case Architecture::kCompactRef: return 64;
  }
  return 64;
}

nn::ArchitectureSpec architecture_spec(Architecture arch) {
  switch (arch) {
    case Architecture::kVgg16Class: return nn::vgg16_class();
    case Architecture::kInceptionV4Class: return nn::inception_v4_class();
    case Architecture::kCompactRef: return nn::compact_ref();
  }
  return nn::compact_ref();
}

void ModelConfig::validate() const {
  if (input_size_px != required_input_px(architecture)) {
    fail(ErrorCode::kInvalidArgument,
         std::string(to_string(architecture)) + " requires " +
             std::to_string(required_input_px(architecture)) + " px input, got " +
             std::to_string(input_size_px));
  }
  if (batch_norm) {
    fail(ErrorCode::kInvalidArgument, "batch normalization is not supported");
  }
  if (batch_size <= 0 || max_steps < 0 || patch_px <= 0) {
    fail(ErrorCode::kInvalidArgument, "batch_size, max_steps, patch_px out of range");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::kInvalidArgument, "learning_rate must be finite and >= 0");
  }
}

ModelConfig default_config(Architecture arch) {
  ModelConfig c;
  c.architecture = arch;
  c.input_size_px = required_input_px(arch);
  return c;
}

// ---------------------------------------------------------------------------
// Augmentation

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

struct Hsl {
  double h, s, l;
};

Hsl rgb_to_hsl(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  Hsl out{0.0, 0.0, (mx + mn) / 2.0};
  if (mx == mn) return out;
  const double d = mx - mn;
  out.s = out.l > 0.5 ? d / (2.0 - mx - mn) : d / (mx + mn);
  if (mx == r) {
    out.h = (g - b) / d + (g < b ? 6.0 : 0.0);
  } else if (mx == g) {
    out.h = (b - r) / d + 2.0;
  } else {
    out.h = (r - g) / d + 4.0;
  }
  out.h *= 60.0;
  return out;
}

double hue_to_channel(double p, double q, double t) {
  if (t < 0.0) t += 1.0;
  if (t > 1.0) t -= 1.0;
  if (t < 1.0 / 6.0) return p + (q - p) * 6.0 * t;
  if (t < 0.5) return q;
  if (t < 2.0 / 3.0) return p + (q - p) * (2.0 / 3.0 - t) * 6.0;
  return p;
}

void hsl_to_rgb(const Hsl& c, double& r, double& g, double& b) {
  if (c.s == 0.0) {
    r = g = b = c.l;
    return;
  }
  const double q = c.l < 0.5 ? c.l * (1.0 + c.s) : c.l + c.s - c.l * c.s;
  const double p = 2.0 * c.l - q;
  const double h = c.h / 360.0;
  r = hue_to_channel(p, q, h + 1.0 / 3.0);
  g = hue_to_channel(p, q, h);
  b = hue_to_channel(p, q, h - 1.0 / 3.0);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

RgbImage shift_reflect(const RgbImage& in, int dx, int dy) {
  RgbImage out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    const int sy = reflect101(y + dy, in.height);
    for (int x = 0; x < in.width; ++x) {
      const int sx = reflect101(x + dx, in.width);
      std::memcpy(out.at(x, y), in.at(sx, sy), 3);
    }
  }
  return out;
}

RgbImage rotate_cw(const RgbImage& in) {
  RgbImage out(in.height, in.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      std::memcpy(out.at(x, y), in.at(y, in.height - 1 - x), 3);
    }
  }
  return out;
}

RgbImage mirror(const RgbImage& in) {
  RgbImage out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      std::memcpy(out.at(x, y), in.at(in.width - 1 - x, y), 3);
    }
  }
  return out;
}

}  // namespace

AugmentationParams draw_augmentation(const AugmentationConfig& cfg,
                                     std::mt19937_64& rng) {
  AugmentationParams p;
  if (cfg.shift_px_max > 0) {
    std::uniform_int_distribution<int> shift(-cfg.shift_px_max, cfg.shift_px_max);
    p.shift_x = shift(rng);
    p.shift_y = shift(rng);
  }
  if (cfg.rotate_flip) {
    p.dihedral = std::uniform_int_distribution<int>(0, 7)(rng);
  }
  auto jitter = [&](double max) {
    return max > 0.0 ? std::uniform_real_distribution<double>(-max, max)(rng) : 0.0;
  };
  p.hue_deg = jitter(cfg.hsl.hue_deg_max);
  p.sat_frac = jitter(cfg.hsl.sat_frac_max);
  p.light_frac = jitter(cfg.hsl.light_frac_max);
  return p;
}

RgbImage apply_augmentation(const RgbImage& image, const AugmentationParams& p) {
  RgbImage out = (p.shift_x || p.shift_y)
                     ? shift_reflect(image, p.shift_x, p.shift_y)
                     : image;
  for (int i = 0; i < p.dihedral % 4; ++i) out = rotate_cw(out);
  if (p.dihedral >= 4) out = mirror(out);
  if (p.hue_deg != 0.0 || p.sat_frac != 0.0 || p.light_frac != 0.0) {
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint8_t* px = out.data.data() + i * 3;
      Hsl c = rgb_to_hsl(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0);
      c.h = std::fmod(c.h + p.hue_deg + 360.0, 360.0);
      c.s = std::clamp(c.s * (1.0 + p.sat_frac), 0.0, 1.0);
      c.l = std::clamp(c.l * (1.0 + p.light_frac), 0.0, 1.0);
      double r, g, b;
      hsl_to_rgb(c, r, g, b);
      px[0] = to_byte(r);
      px[1] = to_byte(g);
      px[2] = to_byte(b);
    }
  }
  return out;
}

PatchImage augment(const PatchImage& patch, const AugmentationConfig& cfg,
                   std::mt19937_64& rng) {
  PatchImage out;
  out.grid_x = patch.grid_x;
  out.grid_y = patch.grid_y;
  out.pixels = apply_augmentation(patch.pixels, draw_augmentation(cfg, rng));
  return out;
}

namespace {

RgbImage resize_rgb(const RgbImage& in, int target) {
  if (in.width == target && in.height == target) return in;
  cv::Mat src(in.height, in.width, CV_8UC3,
              const_cast<std::uint8_t*>(in.data.data()));
  RgbImage out(target, target);
  cv::Mat dst(target, target, CV_8UC3, out.data.data());
  cv::resize(src, dst, cv::Size(target, target), 0, 0, cv::INTER_LINEAR);
  return out;
}

}  // namespace

PatchImage resize_patch(const PatchImage& patch, int target_px) {
  if (target_px <= 0) {
    fail(ErrorCode::kInvalidArgument, "target_px must be positive");
  }
  PatchImage out;
  out.grid_x = patch.grid_x;
  out.grid_y = patch.grid_y;
  out.pixels = resize_rgb(patch.pixels, target_px);
  return out;
}

std::vector<double> to_input_tensor(const RgbImage& image, int input_px) {
  const RgbImage sized = resize_rgb(image, input_px);
  const std::size_t plane = static_cast<std::size_t>(input_px) * input_px;
  std::vector<double> t(plane * 3);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      t[c * plane + i] = sized.data[i * 3 + c] / 255.0 - 0.5;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Presets

const std::vector<Preset>& presets() {
  static const std::vector<Preset> kPresets = {
      {"vgg-manual", Architecture::kVgg16Class, TrainingSet::kManual, 86'154},
      {"incep-manual", Architecture::kInceptionV4Class, TrainingSet::kManual, 86'154},
      {"vgg-semi", Architecture::kVgg16Class, TrainingSet::kSemi, 301'000},
      {"incep-semi", Architecture::kInceptionV4Class, TrainingSet::kSemi, 301'000},
      {"vgg-all", Architecture::kVgg16Class, TrainingSet::kAll, 387'154},
      {"incep-all", Architecture::kInceptionV4Class, TrainingSet::kAll, 387'154},
      {"vgg-mix", Architecture::kVgg16Class, TrainingSet::kMix, 155'154},
      {"incep-mix", Architecture::kInceptionV4Class, TrainingSet::kMix, 155'154},
  };
  return kPresets;
}

const Preset& find_preset(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  for (const auto& p : presets()) {
    if (p.name == key) return p;
  }
  fail(ErrorCode::kInvalidArgument, "unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Model

namespace {

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

TrainedModel::TrainedModel(ModelConfig config, AugmentationConfig aug,
                           std::vector<double> weights,
                           std::string training_manifest_name)
    : config_(std::move(config)),
      aug_(aug),
      weights_(std::move(weights)),
      manifest_name_(std::move(training_manifest_name)),
      network_(architecture_spec(config_.architecture)) {
  if (weights_.size() != network_.param_count()) {
    fail(ErrorCode::kModelMismatch,
         "weight blob has " + std::to_string(weights_.size()) +
             " values, architecture needs " +
             std::to_string(network_.param_count()));
  }
}

std::string TrainedModel::model_id() const {
  std::ostringstream id;
  id << to_string(config_.architecture) << '-' << std::hex << std::setw(16)
     << std::setfill('0') << fnv1a(weights_);
  return id.str();
}

double TrainedModel::score(const RgbImage& patch) const {
  nn::Workspace ws;
  const auto input = to_input_tensor(patch, config_.input_size_px);
  return nn::sigmoid(network_.forward(weights_, input, ws));
}

namespace {

template <typename Get>
std::vector<double> score_all(const TrainedModel& model, std::size_t n, Get get) {
  std::vector<double> scores(n, 0.0);
  std::exception_ptr error;
  const long long count = static_cast<long long>(n);
#pragma omp parallel
  {
    nn::Workspace ws;
#pragma omp for schedule(dynamic, 4)
    for (long long i = 0; i < count; ++i) {
      try {
        const auto input =
            to_input_tensor(get(static_cast<std::size_t>(i)), model.config().input_size_px);
        scores[i] = nn::sigmoid(model.network().forward(model.weights(), input, ws));
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return scores;
}

}  // namespace

std::vector<double> predict_batch(const TrainedModel& model,
                                  std::span<const PatchImage> patches) {
  return score_all(model, patches.size(),
                   [&](std::size_t i) -> const RgbImage& { return patches[i].pixels; });
}

std::vector<double> predict_batch(const TrainedModel& model,
                                  std::span<const RgbImage> patches) {
  return score_all(model, patches.size(),
                   [&](std::size_t i) -> const RgbImage& { return patches[i]; });
}

PatchLoader make_file_loader(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const PatchRecord& r) {
    std::filesystem::path p = r.patch_uri;
    if (p.is_relative()) p = base / p;
    return read_rgb(p);
  };
}

PatchLoader make_slide_loader(std::vector<SlideRef> slides, int patch_px) {
  auto by_id = std::make_shared<std::map<std::string, SlideRef>>();
  for (auto& s : slides) by_id->emplace(s.slide_id, std::move(s));
  return [by_id, patch_px](const PatchRecord& r) {
    auto it = by_id->find(r.slide_id);
    if (it == by_id->end()) {
      fail(ErrorCode::kNotFound, "no slide '" + r.slide_id + "' for patch record");
    }
    TileGrid grid = build_grid(it->second, patch_px);
    return extract_patch(it->second, grid, r.grid_x, r.grid_y).pixels;
  };
}

// ---------------------------------------------------------------------------
// Training

BatchPlanner::BatchPlanner(const ModelConfig& config,
                           const AugmentationConfig& aug,
                           const AnnotationManifest& manifest)
    : manifest_(manifest), config_(config), aug_(aug), order_rng_(config.rng_seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    (manifest.records[i].label == Label::kPositive ? pos : neg).push_back(i);
  }
  pool_.resize(manifest.records.size());
  std::iota(pool_.begin(), pool_.end(), 0);
  if (config.oversample_positive && !pos.empty() && pos.size() < neg.size()) {
    for (std::size_t k = 0; pool_.size() < 2 * neg.size(); ++k) {
      pool_.push_back(pos[k % pos.size()]);
    }
  }
  reshuffle();
}

void BatchPlanner::reshuffle() {
  order_ = pool_;
  std::shuffle(order_.begin(), order_.end(), order_rng_);
  cursor_ = 0;
}

BatchPlan BatchPlanner::next(int step) {
  BatchPlan plan;
  plan.indices.reserve(config_.batch_size);
  plan.augmentations.reserve(config_.batch_size);
  for (int i = 0; i < config_.batch_size; ++i) {
    const std::size_t idx = order_[cursor_++];
    plan.indices.push_back(idx);
    (manifest_.records[idx].label == Label::kPositive ? current_.positives
                                                      : current_.negatives)++;
    // Each draw gets its own stream so parallel preprocessing stays
    // reproducible.
    std::seed_seq seq{static_cast<std::uint32_t>(aug_.rng_seed),
                      static_cast<std::uint32_t>(aug_.rng_seed >> 32),
                      static_cast<std::uint32_t>(step),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    plan.augmentations.push_back(draw_augmentation(aug_, rng));
    if (cursor_ == order_.size()) {
      current_.epoch = static_cast<int>(epochs_.size());
      epochs_.push_back(current_);
      current_ = {};
      reshuffle();
    }
  }
  return plan;
}

double loss_and_gradient(const nn::Network& net, std::span<const double> params,
                         const std::vector<std::vector<double>>& inputs,
                         std::span<const int> labels, std::span<double> grad) {
  constexpr std::size_t kGroup = 8;
  constexpr std::size_t kMaxBufferedValues = std::size_t{1} << 25;
  const std::size_t n = inputs.size();
  const std::size_t p = net.param_count();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n == 0) return 0.0;
  const std::size_t n_groups = (n + kGroup - 1) / kGroup;

  // Fixed-size sample groups reduced in order: the result is independent of
  // the thread count.
  const bool buffered = n_groups * p <= kMaxBufferedValues;
  std::vector<double> group_grads(buffered ? n_groups * p : 0, 0.0);
  std::vector<double> group_loss(n_groups, 0.0);

  auto run_group = [&](std::size_t g, std::span<double> out, nn::Workspace& ws) {
    const std::size_t end = std::min(n, (g + 1) * kGroup);
    for (std::size_t i = g * kGroup; i < end; ++i) {
      const double logit = net.forward(params, inputs[i], ws);
      group_loss[g] += nn::bce_with_logit(logit, labels[i]);
      net.backward(params, inputs[i], nn::sigmoid(logit) - labels[i], out, ws);
    }
  };

  if (buffered) {
    const long long groups = static_cast<long long>(n_groups);
#pragma omp parallel
    {
      nn::Workspace ws;
#pragma omp for schedule(static)
      for (long long g = 0; g < groups; ++g) {
        run_group(static_cast<std::size_t>(g),
                  std::span<double>(group_grads).subspan(g * p, p), ws);
      }
    }
    for (std::size_t g = 0; g < n_groups; ++g) {
      const double* src = group_grads.data() + g * p;
      for (std::size_t k = 0; k < p; ++k) grad[k] += src[k];
    }
  } else {
    nn::Workspace ws;
    for (std::size_t g = 0; g < n_groups; ++g) run_group(g, grad, ws);
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : grad) v *= inv;
  double loss = 0.0;
  for (double l : group_loss) loss += l;
  return loss * inv;
}

TrainedModel train(const ModelConfig& config, const AugmentationConfig& aug,
                   const AnnotationManifest& manifest, const PatchLoader& loader,
                   const TrainOptions& options) {
  config.validate();
  const ManifestStats stats = manifest_stats(manifest);
  if (stats.positives == 0 || stats.negatives == 0) {
    fail(ErrorCode::kSingleClass,
         "training manifest '" + manifest.name + "' needs both labels (pos=" +
             std::to_string(stats.positives) +
             ", neg=" + std::to_string(stats.negatives) + ")");
  }

  const nn::Network net(architecture_spec(config.architecture));
  std::vector<double> params;
  if (config.pretrained_weights) {
    params = read_weights_blob(*config.pretrained_weights);
    if (params.size() != net.param_count()) {
      fail(ErrorCode::kModelMismatch, "pretrained weights do not fit the architecture");
    }
  } else {
    params = net.init_params(config.rng_seed);
  }

  TrainingLog log;
  log.manifest_positives = stats.positives;
  log.manifest_negatives = stats.negatives;

  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  std::vector<double> grad(params.size(), 0.0);
  std::vector<double> best = params;
  double beta1_t = 1.0, beta2_t = 1.0;

  auto validation_auc = [&]() -> std::optional<double> {
    if (!options.validation) return std::nullopt;
    const TrainedModel probe(config, aug, params, manifest.name);
    ScoredSet set{predict_batch(probe, options.validation->patches),
                  options.validation->labels};
    return auc_rank(set);
  };

  BatchPlanner planner(config, aug, manifest);
  const int bs = config.batch_size;
  std::vector<std::vector<double>> inputs(bs);
  std::vector<int> labels(bs);

  for (int step = 1; step <= config.max_steps; ++step) {
    const BatchPlan plan = planner.next(step);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 2)
    for (int i = 0; i < bs; ++i) {
      try {
        const PatchRecord& rec = manifest.records[plan.indices[i]];
        const RgbImage raw = loader(rec);
        inputs[i] = to_input_tensor(apply_augmentation(raw, plan.augmentations[i]),
                                    config.input_size_px);
        labels[i] = rec.label == Label::kPositive ? 1 : 0;
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    TrainingLogEntry entry;
    entry.step = step;
    entry.loss = loss_and_gradient(net, params, inputs, labels, grad);
    entry.batch_positives = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
    entry.batch_negatives = bs - entry.batch_positives;
    if (!std::isfinite(entry.loss)) {
      fail(ErrorCode::kNonFiniteLoss,
           "loss became non-finite at step " + std::to_string(step) +
               " (learning_rate=" + std::to_string(config.learning_rate) + ")");
    }

    beta1_t *= config.adam_beta1;
    beta2_t *= config.adam_beta2;
    const double lr = config.learning_rate;
    for (std::size_t k = 0; k < params.size(); ++k) {
      m[k] = config.adam_beta1 * m[k] + (1.0 - config.adam_beta1) * grad[k];
      v[k] = config.adam_beta2 * v[k] + (1.0 - config.adam_beta2) * grad[k] * grad[k];
      const double m_hat = m[k] / (1.0 - beta1_t);
      const double v_hat = v[k] / (1.0 - beta2_t);
      params[k] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }

    const bool eval_now = config.eval_every > 0 &&
                          (step % config.eval_every == 0 || step == config.max_steps);
    if (eval_now) {
      entry.validation_auc = validation_auc();
      if (entry.validation_auc &&
          (!log.best_validation_auc || *entry.validation_auc > *log.best_validation_auc)) {
        log.best_validation_auc = entry.validation_auc;
        log.best_step = step;
        best = params;
      }
    }
    log.steps.push_back(entry);
    if (options.on_step && !options.on_step(entry)) break;
  }

  log.epochs = planner.epochs();
  if (!log.best_validation_auc) {
    best = params;
    log.best_step = log.steps.empty() ? 0 : log.steps.back().step;
  }
  TrainedModel model(config, aug, std::move(best), manifest.name);
  model.log() = std::move(log);
  return model;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kWeightsMagic[4] = {'T', 'I', 'L', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;
static_assert(std::endian::native == std::endian::little,
              "weight blobs are little-endian");

json config_to_json(const ModelConfig& c) {
  json j = {
      {"architecture", to_string(c.architecture)},
      {"input_size_px", c.input_size_px},
      {"patch_px", c.patch_px},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"max_steps", c.max_steps},
      {"batch_norm", c.batch_norm},
      {"rng_seed", c.rng_seed},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_epsilon", c.adam_epsilon},
      {"eval_every", c.eval_every},
      {"oversample_positive", c.oversample_positive},
  };
  j["pretrained_weights"] =
      c.pretrained_weights ? json(*c.pretrained_weights) : json(nullptr);
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.architecture = parse_architecture(j.at("architecture").get<std::string>());
  c.input_size_px = j.at("input_size_px").get<int>();
  c.patch_px = j.value("patch_px", 100);
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_steps = j.at("max_steps").get<int>();
  c.batch_norm = j.value("batch_norm", false);
  c.rng_seed = j.value("rng_seed", std::uint64_t{0});
  c.adam_beta1 = j.value("adam_beta1", 0.9);
  c.adam_beta2 = j.value("adam_beta2", 0.999);
  c.adam_epsilon = j.value("adam_epsilon", 1e-8);
  c.eval_every = j.value("eval_every", 0);
  c.oversample_positive = j.value("oversample_positive", false);
  if (j.contains("pretrained_weights") && j["pretrained_weights"].is_string()) {
    c.pretrained_weights = j["pretrained_weights"].get<std::string>();
  }
  return c;
}

json aug_to_json(const AugmentationConfig& a) {
  return {
      {"shift_px_max", a.shift_px_max},
      {"rotate_flip", a.rotate_flip},
      {"hsl_jitter",
       {{"hue_deg_max", a.hsl.hue_deg_max},
        {"sat_frac_max", a.hsl.sat_frac_max},
        {"light_frac_max", a.hsl.light_frac_max}}},
      {"rng_seed", a.rng_seed},
  };
}

AugmentationConfig aug_from_json(const json& j) {
  AugmentationConfig a;
  a.shift_px_max = j.value("shift_px_max", 20);
  a.rotate_flip = j.value("rotate_flip", true);
  if (j.contains("hsl_jitter")) {
    const auto& h = j["hsl_jitter"];
    a.hsl.hue_deg_max = h.value("hue_deg_max", 5.0);
    a.hsl.sat_frac_max = h.value("sat_frac_max", 0.10);
    a.hsl.light_frac_max = h.value("light_frac_max", 0.05);
  }
  a.rng_seed = j.value("rng_seed", std::uint64_t{0});
  return a;
}

}  // namespace

void write_weights_blob(const std::filesystem::path& path,
                        std::span<const double> weights) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  const std::uint64_t count = weights.size();
  out.write(kWeightsMagic, 4);
  out.write(reinterpret_cast<const char*>(&kWeightsVersion), sizeof(kWeightsVersion));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(weights.data()),
            static_cast<std::streamsize>(weights.size_bytes()));
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<double> read_weights_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0 || version != kWeightsVersion) {
    fail(ErrorCode::kMalformedFile, path.string() + " is not a weight blob");
  }
  std::vector<double> w(count);
  in.read(reinterpret_cast<char*>(w.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) fail(ErrorCode::kMalformedFile, path.string() + " is truncated");
  return w;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_weights_blob(dir / "weights.bin", model.weights());
  {
    json j = {
        {"model_config", config_to_json(model.config())},
        {"augmentation_config", aug_to_json(model.augmentation())},
        {"training_manifest_name", model.training_manifest_name()},
        {"model_id", model.model_id()},
        {"best_step", model.log().best_step},
    };
    if (model.log().best_validation_auc) {
      j["best_validation_auc"] = *model.log().best_validation_auc;
    }
    std::ofstream out(dir / "config.json", std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot write config.json");
    out << j.dump(2) << '\n';
  }
  std::ofstream out(dir / "training_log.jsonl", std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write training_log.jsonl");
  const auto& log = model.log();
  out << json{{"manifest_positives", log.manifest_positives},
              {"manifest_negatives", log.manifest_negatives}}
             .dump()
      << '\n';
  for (const auto& e : log.steps) {
    json j = {{"step", e.step},
              {"loss", e.loss},
              {"label_counts",
               {{"positives", e.batch_positives}, {"negatives", e.batch_negatives}}}};
    if (e.validation_auc) j["validation_auc"] = *e.validation_auc;
    out << j.dump() << '\n';
  }
  for (const auto& ep : log.epochs) {
    out << json{{"epoch", ep.epoch},
                {"label_counts",
                 {{"positives", ep.positives}, {"negatives", ep.negatives}}}}
               .dump()
        << '\n';
  }
}

TrainedModel load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) fail(ErrorCode::kUnreadableSource, "no config.json in " + dir.string());
  json j;
  ModelConfig config;
  AugmentationConfig aug;
  std::string manifest_name;
  try {
    in >> j;
    config = config_from_json(j.at("model_config"));
    aug = aug_from_json(j.value("augmentation_config", json::object()));
    manifest_name = j.value("training_manifest_name", std::string{});
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedFile, "bad config.json: " + std::string(e.what()));
  }
  TrainedModel model(config, aug, read_weights_blob(dir / "weights.bin"),
                     manifest_name);

  std::ifstream log_in(dir / "training_log.jsonl");
  std::string line;
  auto& log = model.log();
  log.best_step = j.value("best_step", -1);
  if (j.contains("best_validation_auc")) {
    log.best_validation_auc = j["best_validation_auc"].get<double>();
  }
  while (log_in && std::getline(log_in, line)) {
    if (line.empty()) continue;
    const json e = json::parse(line, nullptr, false);
    if (e.is_discarded()) continue;
    if (e.contains("manifest_positives")) {
      log.manifest_positives = e["manifest_positives"].get<std::size_t>();
      log.manifest_negatives = e["manifest_negatives"].get<std::size_t>();
    } else if (e.contains("step")) {
      TrainingLogEntry s;
      s.step = e["step"].get<int>();
      s.loss = e["loss"].get<double>();
      s.batch_positives = e["label_counts"]["positives"].get<int>();
      s.batch_negatives = e["label_counts"]["negatives"].get<int>();
      if (e.contains("validation_auc")) s.validation_auc = e["validation_auc"].get<double>();
      log.steps.push_back(s);
    } else if (e.contains("epoch")) {
      log.epochs.push_back({e["epoch"].get<int>(),
                            e["label_counts"]["positives"].get<std::size_t>(),
                            e["label_counts"]["negatives"].get<std::size_t>()});
    }
  }
  return model;
}

}  // namespace til
