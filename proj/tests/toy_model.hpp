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

// A COMPACT_REF model trained once per test binary on synthetic
// dark-nuclei vs blank-stroma patches.

#include <map>
#include <memory>

#include "til/model.hpp"
#include "til/synthetic.hpp"

namespace toy {

struct PatchSet {
  til::AnnotationManifest manifest;
  std::shared_ptr<std::map<std::string, til::RgbImage>> pixels =
      std::make_shared<std::map<std::string, til::RgbImage>>();

  til::PatchLoader loader() const {
    return [px = pixels](const til::PatchRecord& r) { return px->at(r.patch_uri); };
  }
  std::vector<til::RgbImage> images() const {
    std::vector<til::RgbImage> out;
    for (const auto& r : manifest.records) out.push_back(pixels->at(r.patch_uri));
    return out;
  }
  std::vector<int> labels() const {
    std::vector<int> out;
    for (const auto& r : manifest.records) out.push_back(r.label == til::Label::kPositive);
    return out;
  }
};

/// n patches alternating positive / negative.
inline PatchSet make_patches(int n, std::uint64_t seed, const std::string& tag) {
  PatchSet s;
  s.manifest.name = tag;
  for (int i = 0; i < n; ++i) {
    til::PatchRecord r;
    r.slide_id = tag;
    r.patient_id = tag;
    r.grid_x = i;
    r.label = i % 2 ? til::Label::kPositive : til::Label::kNegative;
    r.patch_uri = tag + "/" + std::to_string(i);
    (*s.pixels)[r.patch_uri] = til::synth::make_patch(100, i % 2, seed * 100003 + i);
    s.manifest.records.push_back(r);
  }
  return s;
}

inline til::ModelConfig toy_config() {
  auto c = til::default_config(til::Architecture::kCompactRef);
  c.batch_size = 8;
  c.max_steps = 500;
  c.learning_rate = 0.001;
  c.rng_seed = 7;
  return c;
}

inline const til::TrainedModel& model() {
  static const til::TrainedModel m = [] {
    const auto set = make_patches(200, 1, "toy-train");
    til::AugmentationConfig aug;
    aug.rng_seed = 11;
    return til::train(toy_config(), aug, set.manifest, set.loader());
  }();
  return m;
}

}  // namespace toy
