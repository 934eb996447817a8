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

// Manifest builders shared by unit and acceptance tests.

#include <random>
#include <string>

#include "til/annotation.hpp"

namespace fixture {

inline til::PatchRecord record(const std::string& slide, int x, int y,
                               til::CancerType type, bool positive,
                               til::Source source, const std::string& patient = {}) {
  til::PatchRecord r;
  r.slide_id = slide;
  r.patient_id = patient.empty() ? "P-" + slide : patient;
  r.cancer_type = type;
  r.grid_x = x;
  r.grid_y = y;
  r.label = positive ? til::Label::kPositive : til::Label::kNegative;
  r.source = source;
  if (source == til::Source::kSemiAuto) r.origin_threshold = 0.5;
  r.patch_uri = til::patch_file_name(slide, x, y);
  return r;
}

/// Manual manifest of the published size and label balance (21,773
/// positives, 64,381 negatives) spread over the seven manual cohorts.
inline til::AnnotationManifest reference_manual() {
  using til::CancerType;
  const CancerType types[] = {CancerType::BRCA, CancerType::COAD, CancerType::LUAD,
                              CancerType::PAAD, CancerType::PRAD, CancerType::SKCM,
                              CancerType::UCEC};
  til::AnnotationManifest m;
  m.name = "manual";
  const int total = 86154;
  const int positives = 21773;
  for (int i = 0; i < total; ++i) {
    const auto type = types[i % 7];
    const std::string slide = "M" + std::to_string(i / 120);
    m.records.push_back(record(slide, i % 120, 0, type, i < positives,
                               til::Source::kManual));
  }
  return m;
}

/// Semi-automatic harvest: `per_semi_type` records for each of the four semi
/// cohorts, plus BLCA and manual-cohort records the mixture must drop.
inline til::AnnotationManifest reference_semi(int per_semi_type = 17250) {
  using til::CancerType;
  const CancerType semi[] = {CancerType::CESC, CancerType::LUSC, CancerType::READ,
                             CancerType::STAD};
  til::AnnotationManifest m;
  m.name = "semi";
  int slide_no = 0;
  auto add = [&](CancerType type, int n) {
    for (int i = 0; i < n; ++i) {
      if (i % 120 == 0) ++slide_no;
      m.records.push_back(record("S" + std::to_string(slide_no), i % 120, 1, type,
                                 i % 3 == 0, til::Source::kSemiAuto));
    }
  };
  for (auto t : semi) add(t, per_semi_type);
  add(CancerType::BLCA, 1500);
  add(CancerType::LUAD, 2000);
  add(CancerType::BRCA, 700);
  return m;
}

struct RandomInputs {
  til::AnnotationManifest manual;
  til::AnnotationManifest semi;
};

/// Random manual/semi pair over all twelve cohorts with cross-source
/// duplicates.
inline RandomInputs random_inputs(std::mt19937_64& rng) {
  RandomInputs in;
  in.manual.name = "manual";
  in.semi.name = "semi";
  std::uniform_int_distribution<int> type(0, 11), n(0, 300), slide(0, 20), cell(0, 15);
  const int n_manual = n(rng), n_semi = n(rng);
  std::set<til::PatchRecord::Key> seen_m, seen_s;
  for (int i = 0; i < n_manual; ++i) {
    auto r = record("s" + std::to_string(slide(rng)), cell(rng), cell(rng),
                    til::kAllCancerTypes[type(rng)], rng() % 2, til::Source::kManual);
    if (seen_m.insert(r.key()).second) in.manual.records.push_back(r);
  }
  for (int i = 0; i < n_semi; ++i) {
    til::PatchRecord r;
    if (!in.manual.records.empty() && rng() % 5 == 0) {
      // Same cell as a manual record.
      r = in.manual.records[rng() % in.manual.records.size()];
      r.source = til::Source::kSemiAuto;
      r.origin_threshold = 0.3;
    } else {
      r = record("s" + std::to_string(slide(rng)), cell(rng), cell(rng),
                 til::kAllCancerTypes[type(rng)], rng() % 2, til::Source::kSemiAuto);
    }
    if (seen_s.insert(r.key()).second) in.semi.records.push_back(r);
  }
  return in;
}

}  // namespace fixture
