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

#include "til/inference.hpp"

#include <algorithm>

#include "til/error.hpp"

namespace til {

TilMap infer_map(const SlideRef& slide, const TrainedModel& model,
                 const TileGrid& grid, const InferenceOptions& options) {
  if (grid.patch_px != model.config().patch_px) {
    fail(ErrorCode::kModelMismatch,
         "grid patch size " + std::to_string(grid.patch_px) +
             " px differs from the model's " +
             std::to_string(model.config().patch_px) + " px");
  }
  if (grid.slide_id != slide.slide_id ||
      grid.origin.x + grid.n_cols * grid.patch_px > slide.width_px ||
      grid.origin.y + grid.n_rows * grid.patch_px > slide.height_px) {
    fail(ErrorCode::kGeometryMismatch, "grid was not built for slide " + slide.slide_id);
  }
  if (options.batch_size <= 0) {
    fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  }

  TilMap map;
  map.slide_id = slide.slide_id;
  map.patch_px = grid.patch_px;
  map.n_cols = grid.n_cols;
  map.n_rows = grid.n_rows;
  map.model_id = model.model_id();
  map.created_at = options.created_at.value_or(utc_timestamp());
  map.probs.assign(map.n_cells(), 0.0);
  if (options.tissue_filter) map.mask.assign(map.n_cells(), 0);

  const std::size_t n = map.n_cells();
  const std::size_t chunk = static_cast<std::size_t>(options.batch_size);
  std::vector<PatchImage> batch;
  std::vector<std::size_t> cells;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t end = std::min(n, start + chunk);
    batch.clear();
    cells.clear();
    for (std::size_t i = start; i < end; ++i) {
      const int x = static_cast<int>(i % grid.n_cols);
      const int y = static_cast<int>(i / grid.n_cols);
      PatchImage patch = extract_patch(slide, grid, x, y);
      if (options.tissue_filter && !tissue_filter(patch, *options.tissue_filter)) {
        map.mask[i] = 1;
        continue;
      }
      batch.push_back(std::move(patch));
      cells.push_back(i);
    }
    const auto scores = predict_batch(model, batch);
    for (std::size_t k = 0; k < cells.size(); ++k) map.probs[cells[k]] = scores[k];
  }
  return map;
}

}  // namespace til
