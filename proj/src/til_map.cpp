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

#include "til/til_map.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

#include "til/error.hpp"

namespace til {

namespace {

constexpr int kFormatVersion = 1;

void check_geometry(int n_cols, int n_rows, std::size_t payload) {
  if (n_cols < 0 || n_rows < 0) {
    fail(ErrorCode::kGeometryMismatch, "negative map dimensions");
  }
  if (payload != static_cast<std::size_t>(n_cols) * n_rows) {
    fail(ErrorCode::kGeometryMismatch,
         "payload has " + std::to_string(payload) + " cells, header says " +
             std::to_string(n_cols) + "x" + std::to_string(n_rows));
  }
}

// Run-length encoding of the mask as [start, length] pairs over flat indices.
nlohmann::json mask_runs(const std::vector<std::uint8_t>& mask) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    runs.push_back({i, j - i});
    i = j;
  }
  return runs;
}

std::vector<std::uint8_t> mask_from_runs(const nlohmann::json& runs,
                                         std::size_t n_cells) {
  std::vector<std::uint8_t> mask(n_cells, 0);
  for (const auto& run : runs) {
    const auto start = run.at(0).get<std::size_t>();
    const auto len = run.at(1).get<std::size_t>();
    if (start + len > n_cells) {
      fail(ErrorCode::kGeometryMismatch, "mask run outside the grid");
    }
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(start), len, 1);
  }
  return mask;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void TilMap::validate() const {
  check_geometry(n_cols, n_rows, probs.size());
  if (!mask.empty() && mask.size() != probs.size()) {
    fail(ErrorCode::kGeometryMismatch, "mask size differs from grid");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      fail(ErrorCode::kValueOutOfRange,
           "probability out of [0,1] at cell " + std::to_string(i));
    }
    if (masked(i) && probs[i] != 0.0) {
      fail(ErrorCode::kValueOutOfRange, "masked cell with nonzero probability");
    }
  }
}

void BinaryTilMap::validate() const {
  check_geometry(n_cols, n_rows, cells.size());
  for (auto c : cells) {
    if (c > 1) fail(ErrorCode::kValueOutOfRange, "binary cell not 0/1");
  }
}

BinaryTilMap binarize(const TilMap& map, double t, std::string source_map_id) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorCode::kValueOutOfRange, "threshold must lie in [0, 1]");
  }
  BinaryTilMap b;
  b.slide_id = map.slide_id;
  b.patch_px = map.patch_px;
  b.n_cols = map.n_cols;
  b.n_rows = map.n_rows;
  b.threshold = t;
  b.model_id = map.model_id;
  b.created_at = map.created_at;
  b.source_map_id =
      source_map_id.empty() ? map.slide_id + "@" + map.model_id : source_map_id;
  b.cells.resize(map.probs.size());
  for (std::size_t i = 0; i < map.probs.size(); ++i) {
    b.cells[i] = map.probs[i] >= t ? 1 : 0;
  }
  return b;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_map(const TilMap& map, const std::filesystem::path& path) {
  map.validate();
  nlohmann::json header = {
      {"format", "tilmap"},       {"version", kFormatVersion},
      {"kind", "probability"},    {"slide_id", map.slide_id},
      {"patch_px", map.patch_px}, {"n_cols", map.n_cols},
      {"n_rows", map.n_rows},     {"model_id", map.model_id},
      {"created_at", map.created_at},
      {"mask", mask_runs(map.mask)},
  };
  auto out = open_out(path);
  out << header.dump() << '\n';
  std::string row;
  for (int y = 0; y < map.n_rows; ++y) {
    row.clear();
    for (int x = 0; x < map.n_cols; ++x) {
      if (x) row.push_back('\t');
      append_double(row, map.at(x, y));
    }
    row.push_back('\n');
    out << row;
  }
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

void write_map(const BinaryTilMap& map, const std::filesystem::path& path) {
  map.validate();
  nlohmann::json header = {
      {"format", "tilmap"},       {"version", kFormatVersion},
      {"kind", "binary"},         {"slide_id", map.slide_id},
      {"patch_px", map.patch_px}, {"n_cols", map.n_cols},
      {"n_rows", map.n_rows},     {"model_id", map.model_id},
      {"created_at", map.created_at},
      {"threshold", map.threshold},
      {"source_map_id", map.source_map_id},
  };
  auto out = open_out(path);
  out << header.dump() << '\n';
  std::string row;
  for (int y = 0; y < map.n_rows; ++y) {
    row.clear();
    for (int x = 0; x < map.n_cols; ++x) {
      if (x) row.push_back('\t');
      row.push_back(map.cells[static_cast<std::size_t>(y) * map.n_cols + x]
                        ? '1'
                        : '0');
    }
    row.push_back('\n');
    out << row;
  }
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

AnyTilMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::kMalformedFile, path.string() + ": missing header");
  }
  nlohmann::json header;
  std::string kind;
  std::string slide_id, model_id, created_at;
  int patch_px = 0, n_cols = 0, n_rows = 0;
  try {
    header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != "tilmap") {
      fail(ErrorCode::kMalformedFile, path.string() + ": not a tilmap file");
    }
    kind = header.at("kind").get<std::string>();
    slide_id = header.at("slide_id").get<std::string>();
    patch_px = header.at("patch_px").get<int>();
    n_cols = header.at("n_cols").get<int>();
    n_rows = header.at("n_rows").get<int>();
    model_id = header.value("model_id", std::string{});
    created_at = header.value("created_at", std::string{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedFile,
         path.string() + ": malformed header: " + e.what());
  }
  if (kind != "probability" && kind != "binary") {
    fail(ErrorCode::kMalformedFile, path.string() + ": unknown kind " + kind);
  }
  if (n_cols < 0 || n_rows < 0 || patch_px <= 0) {
    fail(ErrorCode::kMalformedFile, path.string() + ": bad geometry");
  }

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n_cols) * n_rows);
  int rows_seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows_seen;
    int cols_in_row = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        fail(ErrorCode::kMalformedFile,
             path.string() + ": bad number in row " + std::to_string(rows_seen));
      }
      values.push_back(v);
      ++cols_in_row;
      p = next;
      if (p < end) {
        if (*p != '\t') {
          fail(ErrorCode::kMalformedFile,
               path.string() + ": expected tab in row " +
                   std::to_string(rows_seen));
        }
        ++p;
      }
    }
    if (cols_in_row != n_cols) {
      fail(ErrorCode::kGeometryMismatch,
           path.string() + ": row " + std::to_string(rows_seen) + " has " +
               std::to_string(cols_in_row) + " cells, expected " +
               std::to_string(n_cols));
    }
  }
  check_geometry(n_cols, n_rows, values.size());
  if (rows_seen != n_rows) {
    fail(ErrorCode::kGeometryMismatch, path.string() + ": row count mismatch");
  }

  if (kind == "probability") {
    TilMap map;
    map.slide_id = slide_id;
    map.patch_px = patch_px;
    map.n_cols = n_cols;
    map.n_rows = n_rows;
    map.model_id = model_id;
    map.created_at = created_at;
    map.probs = std::move(values);
    try {
      const auto& runs = header.value("mask", nlohmann::json::array());
      if (!runs.empty()) map.mask = mask_from_runs(runs, map.n_cells());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformedFile, path.string() + ": bad mask: " + e.what());
    }
    map.validate();
    return map;
  }
  BinaryTilMap map;
  map.slide_id = slide_id;
  map.patch_px = patch_px;
  map.n_cols = n_cols;
  map.n_rows = n_rows;
  map.model_id = model_id;
  map.created_at = created_at;
  map.threshold = header.value("threshold", 0.5);
  map.source_map_id = header.value("source_map_id", std::string{});
  map.cells.reserve(values.size());
  for (double v : values) {
    if (v != 0.0 && v != 1.0) {
      fail(ErrorCode::kValueOutOfRange, path.string() + ": binary cell not 0/1");
    }
    map.cells.push_back(v == 1.0 ? 1 : 0);
  }
  return map;
}

TilMap read_prob_map(const std::filesystem::path& path) {
  auto any = read_map(path);
  if (auto* m = std::get_if<TilMap>(&any)) return std::move(*m);
  fail(ErrorCode::kInvalidArgument,
       path.string() + " is a binary map; a probability map is required");
}

TilMap import_grayscale_map(const GrayImage& image,
                            const GrayscaleImportMeta& meta) {
  if (meta.patch_px <= 0) {
    fail(ErrorCode::kInvalidArgument, "patch_px must be positive");
  }
  TilMap map;
  map.slide_id = meta.slide_id;
  map.patch_px = meta.patch_px;
  map.n_cols = image.width;
  map.n_rows = image.height;
  map.model_id = meta.model_id;
  map.created_at = utc_timestamp();
  map.probs.resize(image.data.size());
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    map.probs[i] = static_cast<double>(image.data[i]) / 255.0;
  }
  return map;
}

TilMap import_grayscale_map(const std::filesystem::path& image_path,
                            const GrayscaleImportMeta& meta) {
  return import_grayscale_map(read_gray(image_path, meta.channel), meta);
}

}  // namespace til
