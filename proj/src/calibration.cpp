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

#include "til/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "til/error.hpp"

namespace til {

std::string_view to_string(ThresholdMethod method) {
  return method == ThresholdMethod::kEqualError ? "eer" : "youden-j";
}

ThresholdMethod parse_threshold_method(std::string_view text) {
  if (text == "eer") return ThresholdMethod::kEqualError;
  if (text == "youden-j") return ThresholdMethod::kYoudenJ;
  fail(ErrorCode::kInvalidArgument,
       "unknown threshold method '" + std::string(text) + "'");
}

namespace {

struct ClassCounts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

ClassCounts validate(const ScoredSet& set) {
  if (set.scores.size() != set.labels.size()) {
    fail(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  ClassCounts c;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!std::isfinite(set.scores[i])) {
      fail(ErrorCode::kValueOutOfRange, "non-finite score");
    }
    if (set.labels[i] == 1) {
      ++c.pos;
    } else if (set.labels[i] == 0) {
      ++c.neg;
    } else {
      fail(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    }
  }
  if (c.pos == 0 || c.neg == 0) {
    fail(ErrorCode::kSingleClass, "both classes are required");
  }
  return c;
}

}  // namespace

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> t(scores.begin(), scores.end());
  t.push_back(0.0);
  t.push_back(1.0);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

double auc_rank(const ScoredSet& set) {
  const ClassCounts c = validate(set);
  const std::size_t n = set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.scores[a] < set.scores[b];
  });
  // Sum of (1-based, tie-averaged) ranks of the positives. Ranks are kept
  // doubled so tie averages stay integral.
  std::int64_t doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && set.scores[order[j]] == set.scores[order[i]]) ++j;
    const auto doubled_avg = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (set.labels[order[k]] == 1) doubled_rank_sum += doubled_avg;
    }
    i = j;
  }
  const std::int64_t doubled_u = doubled_rank_sum - c.pos * (c.pos + 1);
  return static_cast<double>(doubled_u) /
         (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

RocCurve roc_curve(const ScoredSet& set) {
  const ClassCounts c = validate(set);
  RocCurve roc;
  roc.auc = auc_rank(set);

  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.scores[a] < set.scores[b];
  });

  const auto candidates = candidate_thresholds(set.scores);
  roc.points.reserve(candidates.size());
  // Sweep ascending: everything strictly below t is predicted negative.
  std::size_t below = 0;
  std::int64_t pos_below = 0;
  for (double t : candidates) {
    while (below < order.size() && set.scores[order[below]] < t) {
      if (set.labels[order[below]] == 1) ++pos_below;
      ++below;
    }
    const std::int64_t neg_below = static_cast<std::int64_t>(below) - pos_below;
    RocPoint p;
    p.threshold = t;
    p.fn = pos_below;
    p.tp = c.pos - pos_below;
    p.tn = neg_below;
    p.fp = c.neg - neg_below;
    p.fpr = static_cast<double>(p.fp) / static_cast<double>(c.neg);
    p.fnr = static_cast<double>(p.fn) / static_cast<double>(c.pos);
    p.tpr = static_cast<double>(p.tp) / static_cast<double>(c.pos);
    roc.points.push_back(p);
  }
  return roc;
}

CalibrationResult youden_threshold(const ScoredSet& set,
                                   ThresholdMethod method) {
  CalibrationResult result;
  result.method = method;
  result.roc = roc_curve(set);
  // Compare on integer numerators over the common denominator pos * neg so
  // that exact ties stay ties.
  std::int64_t best_key = 0;
  bool first = true;
  for (const RocPoint& p : result.roc.points) {
    const std::int64_t pos = p.tp + p.fn;
    const std::int64_t neg = p.fp + p.tn;
    const std::int64_t key = method == ThresholdMethod::kEqualError
                                 ? -std::abs(p.fp * pos - p.fn * neg)
                                 : p.tp * neg - p.fp * pos;
    // Points are ascending in threshold, so strict improvement keeps the
    // smallest threshold among ties.
    if (first || key > best_key) {
      best_key = key;
      result.chosen_threshold = p.threshold;
      result.criterion_value = method == ThresholdMethod::kEqualError
                                   ? std::abs(p.fpr - p.fnr)
                                   : p.tpr - p.fpr;
      first = false;
    }
  }
  return result;
}

std::vector<std::uint8_t> apply_threshold(std::span<const double> scores,
                                          double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorCode::kValueOutOfRange, "threshold must lie in [0, 1]");
  }
  std::vector<std::uint8_t> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(),
                 [t](double s) { return static_cast<std::uint8_t>(s >= t); });
  return out;
}

ScoredSet read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path);
  ScoredSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorCode::kMalformedFile,
           path + ":" + std::to_string(line_no) + ": expected score,label");
    }
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1);
    char* end = nullptr;
    const double score = std::strtod(a.c_str(), &end);
    if (end == a.c_str()) {
      if (line_no == 1) continue;  // header
      fail(ErrorCode::kMalformedFile,
           path + ":" + std::to_string(line_no) + ": bad score");
    }
    int label = 0;
    std::istringstream lb(b);
    if (!(lb >> label) || (label != 0 && label != 1)) {
      fail(ErrorCode::kMalformedFile,
           path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    set.scores.push_back(score);
    set.labels.push_back(label);
  }
  return set;
}

}  // namespace til
