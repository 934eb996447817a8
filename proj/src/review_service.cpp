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

#include "til/review_service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "til/calibration.hpp"
#include "til/error.hpp"
#include "til/wsi_tiling.hpp"

namespace til {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMapExt = ".tilmap";
constexpr std::string_view kMetaExt = ".meta.json";

void check_id(const std::string& id) {
  const bool ok = !id.empty() && id != "." && id != ".." &&
                  std::all_of(id.begin(), id.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                           c == '_' || c == '-';
                  });
  if (!ok) fail(ErrorCode::kInvalidArgument, "invalid id '" + id + "'");
}

void check_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorCode::kValueOutOfRange, "threshold must lie in [0, 1]");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

MapStore::MapStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (!fs::is_directory(dir_)) {
    fail(ErrorCode::kIoError, "map store directory unusable: " + dir_.string());
  }
}

std::vector<std::string> MapStore::map_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > kMapExt.size() && name.ends_with(kMapExt)) {
      ids.push_back(name.substr(0, name.size() - kMapExt.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool MapStore::contains(const std::string& map_id) const {
  check_id(map_id);
  return fs::exists(dir_ / (map_id + std::string(kMapExt)));
}

std::shared_ptr<const TilMap> MapStore::load(const std::string& map_id) const {
  check_id(map_id);
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(map_id);
    if (it != cache_.end()) return it->second;
  }
  const fs::path p = dir_ / (map_id + std::string(kMapExt));
  if (!fs::exists(p)) fail(ErrorCode::kNotFound, "unknown map '" + map_id + "'");
  auto map = std::make_shared<const TilMap>(read_prob_map(p));
  std::unique_lock lock(mu_);
  return cache_.emplace(map_id, std::move(map)).first->second;
}

MapMeta MapStore::meta(const std::string& map_id) const {
  check_id(map_id);
  MapMeta m;
  const fs::path p = dir_ / (map_id + std::string(kMetaExt));
  if (!fs::exists(p)) return m;
  std::ifstream in(p);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedFile, p.string() + ": " + e.what());
  }
  m.patient_id = j.value("patient_id", "");
  if (j.contains("cancer_type") && j["cancer_type"].is_string()) {
    m.cancer_type = parse_cancer_type(j["cancer_type"].get<std::string>());
  }
  m.pixel_source = j.value("pixel_source", "");
  m.patch_uri_prefix = j.value("patch_uri_prefix", "");
  return m;
}

void MapStore::add(const std::string& map_id, const TilMap& map, const MapMeta& meta) {
  check_id(map_id);
  map.validate();
  std::unique_lock lock(mu_);
  const fs::path p = dir_ / (map_id + std::string(kMapExt));
  if (fs::exists(p)) fail(ErrorCode::kConflict, "map '" + map_id + "' already stored");
  json j = json::object();
  if (!meta.patient_id.empty()) j["patient_id"] = meta.patient_id;
  if (meta.cancer_type) j["cancer_type"] = std::string(to_string(*meta.cancer_type));
  if (!meta.pixel_source.empty()) j["pixel_source"] = meta.pixel_source;
  if (!meta.patch_uri_prefix.empty()) j["patch_uri_prefix"] = meta.patch_uri_prefix;
  {
    std::ofstream out(dir_ / (map_id + std::string(kMetaExt)), std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot write metadata for " + map_id);
    out << j.dump(2) << '\n';
  }
  const fs::path tmp = p.string() + ".tmp";
  write_map(map, tmp);
  fs::rename(tmp, p);
}

// ---------------------------------------------------------------------------

std::string_view to_string(SessionStatus status) {
  return status == SessionStatus::kOpen ? "OPEN" : "COMMITTED";
}

int preview_factor(int n_cols, int n_rows, int preview_max) {
  if (preview_max <= 0) fail(ErrorCode::kInvalidArgument, "preview_max must be positive");
  const int longest = std::max(n_cols, n_rows);
  return std::max(1, (longest + preview_max - 1) / preview_max);
}

std::vector<double> block_mean(std::span<const double> values, int n_cols,
                               int n_rows, int factor) {
  const int pc = (n_cols + factor - 1) / factor;
  const int pr = (n_rows + factor - 1) / factor;
  std::vector<double> sum(static_cast<std::size_t>(pc) * pr, 0.0);
  std::vector<int> cnt(sum.size(), 0);
  for (int y = 0; y < n_rows; ++y) {
    for (int x = 0; x < n_cols; ++x) {
      const std::size_t b = static_cast<std::size_t>(y / factor) * pc + x / factor;
      sum[b] += values[static_cast<std::size_t>(y) * n_cols + x];
      ++cnt[b];
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= cnt[i];
  return sum;
}

ReviewService::ReviewService(ReviewConfig config)
    : config_(std::move(config)), store_(config_.store_dir) {
  if (config_.manifest_dir.empty()) config_.manifest_dir = config_.store_dir / "manifests";
  if (config_.preview_max <= 0) {
    fail(ErrorCode::kInvalidArgument, "preview_max must be positive");
  }
  std::error_code ec;
  fs::create_directories(config_.manifest_dir, ec);
}

std::vector<MapSummary> ReviewService::list_maps() const {
  std::map<std::string, std::string> status;
  {
    std::lock_guard lock(sessions_mu_);
    for (const auto& [id, s] : sessions_) {
      auto& st = status[s->state.map_id];
      if (s->state.status == SessionStatus::kCommitted) {
        st = "COMMITTED";
      } else if (st.empty()) {
        st = "IN_REVIEW";
      }
    }
  }
  std::vector<MapSummary> out;
  for (const auto& id : store_.map_ids()) {
    const auto map = store_.load(id);
    MapSummary s;
    s.map_id = id;
    s.slide_id = map->slide_id;
    s.cancer_type = store_.meta(id).cancer_type;
    s.n_cells = map->n_cells();
    auto it = status.find(id);
    s.status = it == status.end() ? "UNREVIEWED" : it->second;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const MapSummary& a, const MapSummary& b) {
    return std::tie(a.slide_id, a.map_id) < std::tie(b.slide_id, b.map_id);
  });
  return out;
}

MapPayload ReviewService::get_map(const std::string& map_id, bool full) const {
  MapPayload p;
  p.map_id = map_id;
  p.map = store_.load(map_id);
  p.factor = preview_factor(p.map->n_cols, p.map->n_rows, config_.preview_max);
  p.preview_cols = (p.map->n_cols + p.factor - 1) / p.factor;
  p.preview_rows = (p.map->n_rows + p.factor - 1) / p.factor;
  p.preview = block_mean(p.map->probs, p.map->n_cols, p.map->n_rows, p.factor);
  p.include_full = full;
  return p;
}

ThresholdPreview ReviewService::preview_threshold(const std::string& map_id,
                                                  double t) const {
  check_threshold(t);
  const auto map = store_.load(map_id);
  const auto decisions = apply_threshold(map->probs, t);
  ThresholdPreview r;
  r.threshold = t;
  r.n_cells = decisions.size();
  r.positive_count = static_cast<std::size_t>(
      std::count(decisions.begin(), decisions.end(), std::uint8_t{1}));
  r.positive_fraction =
      r.n_cells == 0 ? 0.0 : static_cast<double>(r.positive_count) / r.n_cells;
  const int f = preview_factor(map->n_cols, map->n_rows, config_.preview_max);
  r.preview_cols = (map->n_cols + f - 1) / f;
  r.preview_rows = (map->n_rows + f - 1) / f;
  std::vector<int> pos(static_cast<std::size_t>(r.preview_cols) * r.preview_rows, 0);
  std::vector<int> cnt(pos.size(), 0);
  for (int y = 0; y < map->n_rows; ++y) {
    for (int x = 0; x < map->n_cols; ++x) {
      const std::size_t b = static_cast<std::size_t>(y / f) * r.preview_cols + x / f;
      pos[b] += decisions[static_cast<std::size_t>(y) * map->n_cols + x];
      ++cnt[b];
    }
  }
  r.binary_preview.resize(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    r.binary_preview[i] = 2 * pos[i] >= cnt[i] ? 1 : 0;
  }
  return r;
}

PatchSamples ReviewService::sample_patches(const std::string& map_id, double t,
                                           int n_per_side) const {
  check_threshold(t);
  if (n_per_side < 0) fail(ErrorCode::kInvalidArgument, "n must be non-negative");
  const auto map = store_.load(map_id);
  const MapMeta meta = store_.meta(map_id);
  if (meta.pixel_source.empty()) {
    fail(ErrorCode::kUnavailable, "thumbnails unavailable: map '" + map_id +
                                      "' has no slide pixels");
  }
  fs::path src = meta.pixel_source;
  if (src.is_relative()) src = store_.dir() / src;
  SlideRef slide;
  try {
    slide = load_slide(src);
  } catch (const Error& e) {
    fail(ErrorCode::kUnavailable, std::string("thumbnails unavailable: ") + e.what());
  }
  TileGrid grid;
  grid.slide_id = map->slide_id;
  grid.patch_px = map->patch_px;
  grid.n_cols = map->n_cols;
  grid.n_rows = map->n_rows;

  std::vector<std::size_t> above, below;
  for (std::size_t i = 0; i < map->n_cells(); ++i) {
    if (map->masked(i)) continue;
    (is_positive(map->probs[i], t) ? above : below).push_back(i);
  }
  auto by_distance = [&](std::vector<std::size_t>& v) {
    std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      const double da = std::abs(map->probs[a] - t);
      const double db = std::abs(map->probs[b] - t);
      return da < db || (da == db && a < b);
    });
    if (v.size() > static_cast<std::size_t>(n_per_side)) v.resize(n_per_side);
  };
  by_distance(above);
  by_distance(below);
  auto make = [&](std::size_t i) {
    PatchSample s;
    s.grid_x = static_cast<int>(i % map->n_cols);
    s.grid_y = static_cast<int>(i / map->n_cols);
    s.prob = map->probs[i];
    try {
      s.png = encode_png(extract_patch(slide, grid, s.grid_x, s.grid_y).pixels);
    } catch (const Error& e) {
      fail(ErrorCode::kUnavailable, std::string("thumbnails unavailable: ") + e.what());
    }
    return s;
  };
  PatchSamples out;
  for (auto i : above) out.positives.push_back(make(i));
  for (auto i : below) out.negatives.push_back(make(i));
  return out;
}

ReviewSession ReviewService::create_session(const std::string& map_id) {
  const auto map = store_.load(map_id);
  auto s = std::make_shared<SessionSlot>();
  std::lock_guard lock(sessions_mu_);
  s->state.session_id = "s" + std::to_string(next_session_++);
  s->state.map_id = map_id;
  sessions_.emplace(s->state.session_id, s);
  return s->state;
}

std::shared_ptr<ReviewService::SessionSlot> ReviewService::slot(
    const std::string& session_id) const {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    fail(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  }
  return it->second;
}

ReviewSession ReviewService::session(const std::string& session_id) const {
  auto s = slot(session_id);
  std::lock_guard lock(sessions_mu_);
  return s->state;
}

CommitResult ReviewService::commit(const std::string& session_id, double t,
                                   long long n_samples, std::uint64_t seed,
                                   HarvestMode mode) {
  auto s = slot(session_id);
  std::lock_guard commit_lock(s->commit_mu);
  std::string map_id;
  {
    std::lock_guard lock(sessions_mu_);
    if (s->state.status == SessionStatus::kCommitted) {
      fail(ErrorCode::kConflict, "session '" + session_id + "' is already committed");
    }
    map_id = s->state.map_id;
  }
  check_threshold(t);
  const auto map = store_.load(map_id);
  const MapMeta meta = store_.meta(map_id);
  if (!meta.cancer_type) {
    fail(ErrorCode::kInvalidArgument,
         "map '" + map_id + "' has no cancer_type; harvested records need one");
  }
  SlideInfo info;
  info.patient_id = meta.patient_id.empty() ? map->slide_id : meta.patient_id;
  info.cancer_type = *meta.cancer_type;
  info.patch_uri_prefix = meta.patch_uri_prefix;

  AnnotationManifest manifest;
  manifest.name = map_id + "-" + session_id;
  manifest.split = Split::kTrain;
  manifest.records = harvest_semi_auto(*map, info, t, n_samples, seed, mode);

  const fs::path final_path = config_.manifest_dir / (manifest.name + ".jsonl");
  const fs::path tmp_path = final_path.string() + ".partial";
  try {
    write_manifest(manifest, tmp_path);
    if (fault_hook_) fault_hook_(tmp_path);
    fs::rename(tmp_path, final_path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp_path, ec);
    throw;
  }

  std::lock_guard lock(sessions_mu_);
  s->state.current_threshold = t;
  s->state.status = SessionStatus::kCommitted;
  s->state.committed_manifest = final_path;
  return {s->state, manifest.records.size()};
}

void ReviewService::set_commit_fault_hook(
    std::function<void(const fs::path&)> hook) {
  fault_hook_ = std::move(hook);
}

}  // namespace til
