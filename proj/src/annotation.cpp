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

#include "til/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "til/error.hpp"

namespace til {

namespace {

using nlohmann::json;

json record_to_json(const PatchRecord& r) {
  json j = {
      {"slide_id", r.slide_id},
      {"patient_id", r.patient_id},
      {"cancer_type", to_string(r.cancer_type)},
      {"grid_x", r.grid_x},
      {"grid_y", r.grid_y},
      {"label", to_string(r.label)},
      {"source", to_string(r.source)},
      {"patch_uri", r.patch_uri},
  };
  if (r.origin_threshold) j["origin_threshold"] = *r.origin_threshold;
  return j;
}

PatchRecord record_from_json(const json& j) {
  PatchRecord r;
  r.slide_id = j.at("slide_id").get<std::string>();
  r.patient_id = j.at("patient_id").get<std::string>();
  r.cancer_type = parse_cancer_type(j.at("cancer_type").get<std::string>());
  r.grid_x = j.at("grid_x").get<int>();
  r.grid_y = j.at("grid_y").get<int>();
  r.label = parse_label(j.at("label").get<std::string>());
  r.source = parse_source(j.at("source").get<std::string>());
  if (j.contains("origin_threshold") && !j["origin_threshold"].is_null()) {
    r.origin_threshold = j["origin_threshold"].get<double>();
  }
  r.patch_uri = j.value("patch_uri", std::string{});
  return r;
}

std::vector<std::size_t> sample_indices(std::vector<std::size_t> pool,
                                        std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  out.reserve(std::min(n, pool.size()));
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), n, rng);
  return out;
}

}  // namespace

void AnnotationManifest::validate() const {
  std::set<PatchRecord::Key> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.key()).second) {
      fail(ErrorCode::kDuplicateRecord,
           "manifest '" + name + "' repeats patch " + r.slide_id + " (" +
               std::to_string(r.grid_x) + "," + std::to_string(r.grid_y) + ")");
    }
    if ((r.source == Source::kSemiAuto) != r.origin_threshold.has_value()) {
      fail(ErrorCode::kInvalidArgument,
           "origin_threshold must be present exactly for SEMI_AUTO records (" +
               r.slide_id + ")");
    }
    if (r.origin_threshold &&
        !(*r.origin_threshold >= 0.0 && *r.origin_threshold <= 1.0)) {
      fail(ErrorCode::kValueOutOfRange, "origin_threshold outside [0,1]");
    }
  }
}

std::set<std::string> AnnotationManifest::patient_ids() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.patient_id);
  return ids;
}

std::string to_jsonl(const AnnotationManifest& manifest) {
  std::string out;
  out += json{{"manifest", {{"name", manifest.name},
                            {"split", to_string(manifest.split)}}}}
             .dump();
  out += '\n';
  for (const auto& r : manifest.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const AnnotationManifest& manifest,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_jsonl(manifest);
  out.flush();
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

AnnotationManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path.string());
  AnnotationManifest m;
  m.name = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("manifest")) {
        m.name = j["manifest"].value("name", m.name);
        m.split = parse_split(j["manifest"].value("split", std::string("TRAIN")));
        continue;
      }
      m.records.push_back(record_from_json(j));
    } catch (const json::exception& e) {
      fail(ErrorCode::kMalformedFile,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::kMalformedFile,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  m.validate();
  return m;
}

std::string patch_file_name(const std::string& slide_id, int grid_x,
                            int grid_y) {
  return slide_id + "_" + std::to_string(grid_x) + "_" +
         std::to_string(grid_y) + ".png";
}

std::vector<PatchRecord> harvest_semi_auto(const TilMap& map,
                                           const SlideInfo& info,
                                           double threshold, long long n_samples,
                                           std::uint64_t rng_seed,
                                           HarvestMode mode) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kValueOutOfRange, "threshold must lie in [0, 1]");
  }
  map.validate();
  const std::size_t n_cells = map.n_cells();
  if (n_cells == 0) fail(ErrorCode::kEmptyGrid, "cannot harvest an empty map");
  const std::size_t n = n_samples <= 0
                            ? n_cells
                            : std::min<std::size_t>(
                                  static_cast<std::size_t>(n_samples), n_cells);

  std::mt19937_64 rng(rng_seed);
  std::vector<std::size_t> chosen;
  if (mode == HarvestMode::kUniform) {
    std::vector<std::size_t> all(n_cells);
    std::iota(all.begin(), all.end(), 0);
    chosen = sample_indices(std::move(all), n, rng);
  } else {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n_cells; ++i) {
      (is_positive(map.probs[i], threshold) ? pos : neg).push_back(i);
    }
    std::size_t take_pos = std::min(pos.size(), (n + 1) / 2);
    const std::size_t take_neg = std::min(neg.size(), n - take_pos);
    take_pos = std::min(pos.size(), n - take_neg);
    chosen = sample_indices(std::move(pos), take_pos, rng);
    auto negs = sample_indices(std::move(neg), take_neg, rng);
    chosen.insert(chosen.end(), negs.begin(), negs.end());
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<PatchRecord> records;
  records.reserve(chosen.size());
  for (std::size_t idx : chosen) {
    PatchRecord r;
    r.slide_id = map.slide_id;
    r.patient_id = info.patient_id.empty() ? map.slide_id : info.patient_id;
    r.cancer_type = info.cancer_type;
    r.grid_x = static_cast<int>(idx % static_cast<std::size_t>(map.n_cols));
    r.grid_y = static_cast<int>(idx / static_cast<std::size_t>(map.n_cols));
    r.label = is_positive(map.probs[idx], threshold) ? Label::kPositive
                                                     : Label::kNegative;
    r.source = Source::kSemiAuto;
    r.origin_threshold = threshold;
    r.patch_uri =
        info.patch_uri_prefix + patch_file_name(map.slide_id, r.grid_x, r.grid_y);
    records.push_back(std::move(r));
  }
  return records;
}

void MixturePolicy::validate() const {
  for (CancerType t : kAllCancerTypes) {
    const int hits = static_cast<int>(manual_types.count(t)) +
                     static_cast<int>(semi_types.count(t)) +
                     static_cast<int>(excluded_types.count(t));
    if (hits > 1) {
      fail(ErrorCode::kInvalidArgument,
           "cancer type " + std::string(to_string(t)) +
               " appears in more than one policy set");
    }
  }
}

MixturePolicy read_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path.string());
  MixturePolicy p;
  try {
    json j;
    in >> j;
    auto read_set = [&](const char* key, std::set<CancerType>& dst) {
      if (!j.contains(key)) return;
      dst.clear();
      for (const auto& code : j.at(key)) {
        dst.insert(parse_cancer_type(code.get<std::string>()));
      }
    };
    read_set("manual_types", p.manual_types);
    read_set("semi_types", p.semi_types);
    read_set("excluded_types", p.excluded_types);
    if (j.contains("semi_caps")) {
      for (const auto& [code, cap] : j.at("semi_caps").items()) {
        p.semi_caps[parse_cancer_type(code)] = cap.get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

MixtureOutcome assemble_mixture(const AnnotationManifest& manual,
                                const AnnotationManifest& semi,
                                const MixturePolicy& policy, std::string name) {
  policy.validate();
  manual.validate();
  semi.validate();
  auto covered = [&](CancerType t) {
    return policy.manual_types.count(t) + policy.semi_types.count(t) +
               policy.excluded_types.count(t) ==
           1;
  };
  for (const auto* m : {&manual, &semi}) {
    for (const auto& r : m->records) {
      if (!covered(r.cancer_type)) {
        fail(ErrorCode::kUncoveredCancerType,
             "cancer type " + std::string(to_string(r.cancer_type)) +
                 " is in no policy set");
      }
    }
  }

  MixtureOutcome out;
  out.manifest.name = std::move(name);
  out.manifest.split = Split::kTrain;
  std::set<PatchRecord::Key> keys;
  for (const auto& r : manual.records) {
    if (r.source != Source::kManual) {
      fail(ErrorCode::kInvalidArgument,
           "manual manifest contains a SEMI_AUTO record (" + r.slide_id + ")");
    }
    if (policy.manual_types.count(r.cancer_type)) {
      out.manifest.records.push_back(r);
      keys.insert(r.key());
      ++out.manual_kept;
    }
  }
  std::map<CancerType, std::size_t> taken;
  for (const auto& r : semi.records) {
    if (r.source != Source::kSemiAuto) {
      fail(ErrorCode::kInvalidArgument,
           "semi manifest contains a MANUAL record (" + r.slide_id + ")");
    }
    if (!policy.semi_types.count(r.cancer_type)) continue;
    if (keys.count(r.key())) {
      ++out.semi_dropped_as_duplicate;
      continue;
    }
    if (auto cap = policy.semi_caps.find(r.cancer_type);
        cap != policy.semi_caps.end() && taken[r.cancer_type] >= cap->second) {
      continue;
    }
    ++taken[r.cancer_type];
    out.manifest.records.push_back(r);
    ++out.semi_kept;
  }
  return out;
}

PatientSplit split_by_patient(const std::vector<AnnotationManifest>& manifests,
                              double test_fraction, std::uint64_t rng_seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "test_fraction must lie in (0, 1)");
  }
  AnnotationManifest merged;
  merged.name = "merged";
  for (const auto& m : manifests) {
    merged.records.insert(merged.records.end(), m.records.begin(),
                          m.records.end());
  }
  merged.validate();
  const auto id_set = merged.patient_ids();
  if (id_set.size() < 2) {
    fail(ErrorCode::kInvalidArgument,
         "need at least 2 distinct patients to split, found " +
             std::to_string(id_set.size()));
  }
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  std::mt19937_64 rng(rng_seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = static_cast<long long>(ids.size());
  const long long n_test =
      std::clamp<long long>(std::llround(test_fraction * static_cast<double>(n)),
                            1, n - 1);
  const std::set<std::string> test_ids(ids.begin(), ids.begin() + n_test);

  PatientSplit split;
  split.train.name = "train";
  split.train.split = Split::kTrain;
  split.test.name = "test";
  split.test.split = Split::kTest;
  for (auto& r : merged.records) {
    (test_ids.count(r.patient_id) ? split.test : split.train)
        .records.push_back(std::move(r));
  }
  return split;
}

ManifestStats manifest_stats(const AnnotationManifest& manifest) {
  ManifestStats s;
  for (const auto& r : manifest.records) {
    ++s.total;
    auto& per_type = s.per_type_labels[r.cancer_type];
    if (r.label == Label::kPositive) {
      ++s.positives;
      ++per_type.first;
    } else {
      ++s.negatives;
      ++per_type.second;
    }
    (r.source == Source::kManual ? s.manual : s.semi_auto)++;
    ++s.per_cancer_type[r.cancer_type];
  }
  return s;
}

std::vector<std::pair<int, int>> sample_by_probability_strata(
    const TilMap& map, const std::vector<double>& bin_edges,
    std::size_t per_bin, std::uint64_t rng_seed) {
  if (bin_edges.size() < 2 ||
      !std::is_sorted(bin_edges.begin(), bin_edges.end())) {
    fail(ErrorCode::kInvalidArgument, "bin edges must be ascending, >= 2 values");
  }
  const std::size_t n_bins = bin_edges.size() - 1;
  std::vector<std::vector<std::size_t>> bins(n_bins);
  for (std::size_t i = 0; i < map.probs.size(); ++i) {
    if (map.masked(i)) continue;
    const double p = map.probs[i];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const bool last = b + 1 == n_bins;
      if (p >= bin_edges[b] &&
          (p < bin_edges[b + 1] || (last && p == bin_edges[b + 1]))) {
        bins[b].push_back(i);
        break;
      }
    }
  }
  std::mt19937_64 rng(rng_seed);
  std::vector<std::pair<int, int>> cells;
  for (auto& bin : bins) {
    for (std::size_t idx : sample_indices(std::move(bin), per_bin, rng)) {
      cells.emplace_back(static_cast<int>(idx % map.n_cols),
                         static_cast<int>(idx / map.n_cols));
    }
  }
  return cells;
}

}  // namespace til
