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

#include <optional>
#include <string>

#include "til/model.hpp"
#include "til/til_map.hpp"
#include "til/wsi_tiling.hpp"

namespace til {

struct InferenceOptions {
  /// When set, cells failing the filter get probability 0.0 and a mask bit.
  std::optional<TissueFilterParams> tissue_filter;
  /// Patches scored per chunk; does not change results.
  int batch_size = 128;
  /// Overrides the timestamp (reproducible output files).
  std::optional<std::string> created_at;
};

/// Scores every grid cell. kModelMismatch when the grid's patch size differs
/// from the one the model was trained on, kGeometryMismatch when the grid
/// does not belong to the slide.
TilMap infer_map(const SlideRef& slide, const TrainedModel& model,
                 const TileGrid& grid, const InferenceOptions& options = {});

}  // namespace til
