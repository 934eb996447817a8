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

// Brute-force reference implementations used to check the library. They
// share no code with it.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& l) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

struct ScanResult {
  double threshold = 0.0;
  long long fp = 0;
  long long fn = 0;
};

/// Exhaustive scan over {0, 1} and every observed score for the smallest t
/// minimising |FPR - FNR|, compared as exact fractions.
inline ScanResult eer_scan(const std::vector<double>& s, const std::vector<int>& l) {
  std::set<double> cands(s.begin(), s.end());
  cands.insert(0.0);
  cands.insert(1.0);
  long long pos = 0, neg = 0;
  for (int v : l) (v ? pos : neg)++;
  ScanResult best;
  bool have = false;
  // |fp/neg - fn/pos| compared as |fp*pos - fn*neg| / (pos*neg).
  long long best_num = 0;
  for (double t : cands) {
    long long fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool predicted = s[i] >= t;
      if (predicted && l[i] == 0) ++fp;
      if (!predicted && l[i] == 1) ++fn;
    }
    const long long num = std::llabs(fp * pos - fn * neg);
    if (!have || num < best_num) {
      have = true;
      best_num = num;
      best = {t, fp, fn};
    }
  }
  return best;
}

struct Confusion {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const std::vector<std::uint8_t>& p,
                           const std::vector<std::uint8_t>& t) {
  Confusion c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && t[i]) ++c.tp;
    if (p[i] && !t[i]) ++c.fp;
    if (!p[i] && t[i]) ++c.fn;
    if (!p[i] && !t[i]) ++c.tn;
  }
  return c;
}

/// Textbook 2PR/(P+R); -1 when undefined.
inline double f1(const Confusion& c) {
  if (c.tp == 0) return (c.fp + c.fn == 0) ? -1.0 : 0.0;
  const double p = static_cast<double>(c.tp) / (c.tp + c.fp);
  const double r = static_cast<double>(c.tp) / (c.tp + c.fn);
  return 2 * p * r / (p + r);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() /
           ("tilharvest-" + tag + "-" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
