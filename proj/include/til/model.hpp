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
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "til/annotation.hpp"
#include "til/calibration.hpp"
#include "til/nn/network.hpp"
#include "til/wsi_tiling.hpp"

namespace til {

enum class Architecture { kVgg16Class, kInceptionV4Class, kCompactRef };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);
int required_input_px(Architecture arch);
nn::ArchitectureSpec architecture_spec(Architecture arch);

struct ModelConfig {
  Architecture architecture = Architecture::kCompactRef;
  int input_size_px = 64;
  /// Edge length of the source patches the model is applied to.
  int patch_px = 100;
  std::optional<std::string> pretrained_weights;
  double learning_rate = 0.0005;
  int batch_size = 128;
  int max_steps = 1000;
  bool batch_norm = false;
  std::uint64_t rng_seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Validation AUC is computed every eval_every steps when a validation
  /// set is supplied; the best-AUC weights are kept. 0 disables.
  int eval_every = 0;
  bool oversample_positive = false;

  /// kInvalidArgument when input_size_px disagrees with the architecture,
  /// batch_norm is requested, or numeric fields are out of range.
  void validate() const;
};

ModelConfig default_config(Architecture arch);

struct HslJitter {
  double hue_deg_max = 5.0;
  double sat_frac_max = 0.10;
  double light_frac_max = 0.05;
};

struct AugmentationConfig {
  int shift_px_max = 20;
  bool rotate_flip = true;
  HslJitter hsl;
  std::uint64_t rng_seed = 0;
};

/// Concrete draw of one augmentation.
struct AugmentationParams {
  int shift_x = 0;  // sampling window offset; content moves the other way
  int shift_y = 0;
  int dihedral = 0;  // 0-3 clockwise quarter turns, 4-7 the same then mirrored
  double hue_deg = 0.0;
  double sat_frac = 0.0;
  double light_frac = 0.0;
};

AugmentationParams draw_augmentation(const AugmentationConfig& cfg,
                                     std::mt19937_64& rng);
/// Shift (reflection padding), dihedral transform, HSL jitter, in that order.
RgbImage apply_augmentation(const RgbImage& image, const AugmentationParams& p);
PatchImage augment(const PatchImage& patch, const AugmentationConfig& cfg,
                   std::mt19937_64& rng);

/// Bilinear resize to target_px x target_px.
PatchImage resize_patch(const PatchImage& patch, int target_px);

/// Standard training-set recipes; `expected_records` is the nominal size at full
/// scale.
enum class TrainingSet { kManual, kSemi, kAll, kMix };

struct Preset {
  std::string name;  // e.g. "vgg-mix"
  Architecture architecture;
  TrainingSet training_set;
  std::size_t expected_records;
};

/// The eight model/training-set combinations compared in the study
/// (vgg-manual ... incep-mix).
const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);

struct TrainingLogEntry {
  int step = 0;
  double loss = 0.0;
  int batch_positives = 0;
  int batch_negatives = 0;
  std::optional<double> validation_auc;
};

struct EpochLogEntry {
  int epoch = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct TrainingLog {
  std::vector<TrainingLogEntry> steps;
  std::vector<EpochLogEntry> epochs;
  std::size_t manifest_positives = 0;
  std::size_t manifest_negatives = 0;
  int best_step = -1;
  std::optional<double> best_validation_auc;
};

/// Image tensor fed to the network: resize to the input size, CHW, values
/// v / 255 - 0.5.
std::vector<double> to_input_tensor(const RgbImage& image, int input_px);

class TrainedModel {
 public:
  TrainedModel(ModelConfig config, AugmentationConfig aug,
               std::vector<double> weights, std::string training_manifest_name);

  const ModelConfig& config() const { return config_; }
  const AugmentationConfig& augmentation() const { return aug_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::string& training_manifest_name() const { return manifest_name_; }
  const nn::Network& network() const { return network_; }
  TrainingLog& log() { return log_; }
  const TrainingLog& log() const { return log_; }
  std::string model_id() const;

  /// Probability that the patch is TIL positive. Resizes internally.
  double score(const RgbImage& patch) const;

 private:
  ModelConfig config_;
  AugmentationConfig aug_;
  std::vector<double> weights_;
  std::string manifest_name_;
  nn::Network network_;
  TrainingLog log_;
};

/// Order-preserving scores; each patch is scored independently, so results
/// do not depend on how callers batch.
std::vector<double> predict_batch(const TrainedModel& model,
                                  std::span<const PatchImage> patches);
std::vector<double> predict_batch(const TrainedModel& model,
                                  std::span<const RgbImage> patches);

using PatchLoader = std::function<RgbImage(const PatchRecord&)>;
/// Reads PNGs at patch_uri, resolved against base_dir when relative.
PatchLoader make_file_loader(std::filesystem::path base_dir);

/// Cuts patches straight out of slides (grid origin 0,0) by slide_id and
/// grid coordinates. kNotFound for records of unknown slides.
PatchLoader make_slide_loader(std::vector<SlideRef> slides, int patch_px);

struct ValidationData {
  std::vector<RgbImage> patches;
  std::vector<int> labels;
};

struct TrainOptions {
  std::optional<ValidationData> validation;
  /// Called after each step; return false to stop early.
  std::function<bool(const TrainingLogEntry&)> on_step;
};

/// Adam on mean binary cross-entropy. kSingleClass for one-label manifests,
/// kNonFiniteLoss when the loss diverges.
TrainedModel train(const ModelConfig& config, const AugmentationConfig& aug,
                   const AnnotationManifest& manifest, const PatchLoader& loader,
                   const TrainOptions& options = {});

/// Sequence of (record index, augmentation draw) the trainer consumes; fixed
/// seeds give identical sequences.
struct BatchPlan {
  std::vector<std::size_t> indices;
  std::vector<AugmentationParams> augmentations;
};
class BatchPlanner {
 public:
  BatchPlanner(const ModelConfig& config, const AugmentationConfig& aug,
               const AnnotationManifest& manifest);
  BatchPlan next(int step);
  /// Epochs completed so far with their label counts.
  const std::vector<EpochLogEntry>& epochs() const { return epochs_; }

 private:
  void reshuffle();

  const AnnotationManifest& manifest_;
  ModelConfig config_;
  AugmentationConfig aug_;
  std::vector<std::size_t> pool_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::mt19937_64 order_rng_;
  std::vector<EpochLogEntry> epochs_;
  EpochLogEntry current_;
};

/// Mean BCE loss over the batch and its gradient w.r.t. all parameters.
double loss_and_gradient(const nn::Network& net, std::span<const double> params,
                         const std::vector<std::vector<double>>& inputs,
                         std::span<const int> labels, std::span<double> grad);

/// Checkpoint directory: weights.bin, config.json, training_log.jsonl.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_checkpoint(const std::filesystem::path& dir);

std::vector<double> read_weights_blob(const std::filesystem::path& path);
void write_weights_blob(const std::filesystem::path& path,
                        std::span<const double> weights);

}  // namespace til
