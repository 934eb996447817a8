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

#include "til/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "til/calibration.hpp"
#include "til/error.hpp"

namespace til {

using nlohmann::json;

PatchMetrics patch_metrics(std::span<const std::uint8_t> predictions,
                           std::span<const std::uint8_t> truths,
                           bool with_macro_f1) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    fail(ErrorCode::kInvalidArgument,
         "predictions and truths must be non-empty and equally long");
  }
  PatchMetrics m;
  auto& c = m.counts;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool t = truths[i] != 0;
    if (p && t) ++c.tp;
    else if (p && !t) ++c.fp;
    else if (!p && t) ++c.fn;
    else ++c.tn;
  }
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
  if (2 * c.tp + c.fp + c.fn > 0) {
    m.f1 = 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
  }
  if (with_macro_f1 && m.f1 && 2 * c.tn + c.fp + c.fn > 0) {
    const double f1_neg = 2.0 * c.tn / static_cast<double>(2 * c.tn + c.fp + c.fn);
    m.macro_f1 = (*m.f1 + f1_neg) / 2.0;
  }
  return m;
}

namespace {

MetricRow make_row(std::span<const double> scores, std::span<const int> labels,
                   double threshold, bool with_macro) {
  MetricRow row;
  row.n = scores.size();
  const auto pred = apply_threshold(scores, threshold);
  std::vector<std::uint8_t> truth(labels.begin(), labels.end());
  row.metrics = patch_metrics(pred, truth, with_macro);
  const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                    std::count(labels.begin(), labels.end(), 0) > 0;
  if (both) {
    row.auc = auc_rank(ScoredSet{{scores.begin(), scores.end()},
                                 {labels.begin(), labels.end()}});
  }
  return row;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json row_json(const MetricRow& r) {
  return {
      {"n", r.n},
      {"accuracy", r.metrics.accuracy},
      {"f1", opt(r.metrics.f1)},
      {"precision", opt(r.metrics.precision)},
      {"recall", opt(r.metrics.recall)},
      {"macro_f1", opt(r.metrics.macro_f1)},
      {"auc", opt(r.auc)},
      {"confusion",
       {{"tp", r.metrics.counts.tp},
        {"fp", r.metrics.counts.fp},
        {"fn", r.metrics.counts.fn},
        {"tn", r.metrics.counts.tn}}},
  };
}

}  // namespace

EvalReport evaluate_scores(const std::vector<ModelScores>& models,
                           const AnnotationManifest& test,
                           const std::map<std::string, double>& thresholds,
                           bool with_macro_f1) {
  if (test.records.empty()) {
    fail(ErrorCode::kInvalidArgument, "test manifest is empty");
  }
  std::set<std::string> names;
  for (const auto& m : models) {
    names.insert(m.name);
    if (!thresholds.count(m.name)) {
      fail(ErrorCode::kInvalidArgument, "model '" + m.name + "' has no threshold");
    }
    if (m.scores.size() != test.records.size()) {
      fail(ErrorCode::kGeometryMismatch,
           "model '" + m.name + "' scored " + std::to_string(m.scores.size()) +
               " patches, test manifest has " + std::to_string(test.records.size()));
    }
  }
  for (const auto& [name, t] : thresholds) {
    if (!names.count(name)) {
      fail(ErrorCode::kInvalidArgument, "threshold given for unknown model '" + name + "'");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
      fail(ErrorCode::kValueOutOfRange, "threshold for '" + name + "' outside [0,1]");
    }
  }

  std::vector<int> labels;
  std::map<CancerType, std::vector<std::size_t>> by_type;
  for (std::size_t i = 0; i < test.records.size(); ++i) {
    labels.push_back(test.records[i].label == Label::kPositive ? 1 : 0);
    by_type[test.records[i].cancer_type].push_back(i);
  }

  EvalReport report;
  report.n_test = test.records.size();
  for (const auto& m : models) {
    ModelReport mr;
    mr.name = m.name;
    mr.threshold = thresholds.at(m.name);
    mr.overall = make_row(m.scores, labels, mr.threshold, with_macro_f1);
    for (const auto& [type, idx] : by_type) {
      std::vector<double> s;
      std::vector<int> l;
      for (std::size_t i : idx) {
        s.push_back(m.scores[i]);
        l.push_back(labels[i]);
      }
      mr.per_cancer_type[type] = make_row(s, l, mr.threshold, with_macro_f1);
    }
    report.models.push_back(std::move(mr));
  }
  return report;
}

EvalReport evaluate_models(const std::vector<NamedModel>& models,
                           const AnnotationManifest& test,
                           const std::map<std::string, double>& thresholds,
                           const PatchLoader& loader, bool with_macro_f1) {
  for (const auto& m : models) {
    if (!thresholds.count(m.name)) {
      fail(ErrorCode::kInvalidArgument, "model '" + m.name + "' has no threshold");
    }
  }
  std::vector<RgbImage> patches;
  patches.reserve(test.records.size());
  for (const auto& r : test.records) patches.push_back(loader(r));
  std::vector<ModelScores> scored;
  for (const auto& m : models) {
    scored.push_back({m.name, predict_batch(*m.model, patches)});
  }
  return evaluate_scores(scored, test, thresholds, with_macro_f1);
}

std::string report_to_json(const EvalReport& report) {
  json j = {{"n_test", report.n_test}, {"models", json::array()}};
  for (const auto& m : report.models) {
    json per_type = json::object();
    for (const auto& [type, row] : m.per_cancer_type) {
      per_type[std::string(to_string(type))] = row_json(row);
    }
    j["models"].push_back({{"name", m.name},
                           {"threshold", m.threshold},
                           {"overall", row_json(m.overall)},
                           {"per_cancer_type", per_type}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------

std::string_view to_string(TilLevel level) {
  switch (level) {
    case TilLevel::kLow: return "LOW";
    case TilLevel::kMedium: return "MEDIUM";
    case TilLevel::kHigh: return "HIGH";
  }
  return "LOW";
}

TilLevel parse_til_level(std::string_view text) {
  if (text == "LOW" || text == "low") return TilLevel::kLow;
  if (text == "MEDIUM" || text == "medium") return TilLevel::kMedium;
  if (text == "HIGH" || text == "high") return TilLevel::kHigh;
  fail(ErrorCode::kInvalidArgument, "unknown TIL level '" + std::string(text) + "'");
}

TilLevel rounded_average(std::span<const TilLevel> ratings) {
  if (ratings.empty()) fail(ErrorCode::kInvalidArgument, "no ratings to average");
  long long sum = 0;
  for (TilLevel r : ratings) sum += static_cast<int>(r);
  const long long n = static_cast<long long>(ratings.size());
  // floor(sum / n + 1/2) in integers.
  return static_cast<TilLevel>((2 * sum + n) / (2 * n));
}

std::vector<RgbImage> region_cells(const RgbImage& region) {
  if (region.width != kRegionPx || region.height != kRegionPx) {
    fail(ErrorCode::kGeometryMismatch,
         "regions must be 800x800 px, got " + std::to_string(region.width) + "x" +
             std::to_string(region.height));
  }
  std::vector<RgbImage> cells;
  cells.reserve(kRegionCells);
  for (int y = 0; y < kRegionPx; y += kRegionSubpatchPx) {
    for (int x = 0; x < kRegionPx; x += kRegionSubpatchPx) {
      cells.push_back(region.crop(x, y, kRegionSubpatchPx, kRegionSubpatchPx));
    }
  }
  return cells;
}

int count_at_threshold(std::span<const double> scores, double t) {
  const auto decisions = apply_threshold(scores, t);
  return static_cast<int>(std::count(decisions.begin(), decisions.end(), 1));
}

int region_count(const TrainedModel& model, const RgbImage& region, double t) {
  const auto cells = region_cells(region);
  return count_at_threshold(predict_batch(model, cells), t);
}

RegionRecord make_region_record(std::string region_id,
                                std::vector<TilLevel> expert_labels,
                                int predicted_count) {
  if (predicted_count < 0 || predicted_count > kRegionCells) {
    fail(ErrorCode::kValueOutOfRange, "predicted count outside [0, 64]");
  }
  RegionRecord r;
  r.region_id = std::move(region_id);
  r.final_label = rounded_average(expert_labels);
  r.expert_labels = std::move(expert_labels);
  r.predicted_count = predicted_count;
  return r;
}

Quantiles quantiles(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::kInvalidArgument, "no values");
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

RegionDistribution region_distribution(std::span<const RegionRecord> records) {
  RegionDistribution d;
  for (TilLevel l : {TilLevel::kLow, TilLevel::kMedium, TilLevel::kHigh}) {
    d.counts[l];
  }
  for (const auto& r : records) d.counts[r.final_label].push_back(r.predicted_count);
  for (auto& [level, counts] : d.counts) {
    std::sort(counts.begin(), counts.end());
    if (counts.empty()) {
      d.summary[level] = std::nullopt;
    } else {
      d.summary[level] = quantiles({counts.begin(), counts.end()});
    }
  }
  return d;
}

void write_distribution(const RegionDistribution& dist,
                        const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) fail(ErrorCode::kIoError, "cannot write " + csv_path.string());
  csv << "label,count\n";
  for (const auto& [level, counts] : dist.counts) {
    for (int c : counts) csv << to_string(level) << ',' << c << '\n';
  }
  json j = json::object();
  for (const auto& [level, q] : dist.summary) {
    const auto& counts = dist.counts.at(level);
    json entry = {{"n", counts.size()}, {"counts", counts}};
    if (q) {
      entry["quantiles"] = {{"min", q->min},
                            {"q1", q->q1},
                            {"median", q->median},
                            {"q3", q->q3},
                            {"max", q->max}};
    } else {
      entry["quantiles"] = nullptr;
    }
    j[std::string(to_string(level))] = entry;
  }
  std::ofstream js(json_path, std::ios::trunc);
  if (!js) fail(ErrorCode::kIoError, "cannot write " + json_path.string());
  js << j.dump(2) << '\n';
}

}  // namespace til
