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

// tilpipe: command-line front end for the TIL map pipeline.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "til/annotation.hpp"
#include "til/calibration.hpp"
#include "til/error.hpp"
#include "til/evaluation.hpp"
#include "til/inference.hpp"
#include "til/model.hpp"
#include "til/review_http.hpp"
#include "til/review_service.hpp"
#include "til/synthetic.hpp"
#include "til/til_map.hpp"
#include "til/wsi_tiling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace til;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kUnreadableSource, "cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

bool on_off(const std::string& value) { return value == "on"; }

// ---------------------------------------------------------------------------

struct TileArgs {
  std::string slide, out, tissue = "off";
  int patch_px = 100;
};

void run_tile(const TileArgs& a) {
  const SlideRef slide = load_slide(a.slide);
  const TileGrid grid = build_grid(slide, a.patch_px);
  fs::create_directories(a.out);
  long long written = 0, skipped = 0;
  for (int y = 0; y < grid.n_rows; ++y) {
    for (int x = 0; x < grid.n_cols; ++x) {
      const PatchImage patch = extract_patch(slide, grid, x, y);
      if (on_off(a.tissue) && !tissue_filter(patch)) {
        ++skipped;
        continue;
      }
      write_png(fs::path(a.out) / patch_file_name(slide.slide_id, x, y), patch.pixels);
      ++written;
    }
  }
  const json meta = {{"slide_id", grid.slide_id},
                     {"patch_px", grid.patch_px},
                     {"n_cols", grid.n_cols},
                     {"n_rows", grid.n_rows},
                     {"origin_offset", {grid.origin.x, grid.origin.y}},
                     {"microns_per_pixel", grid.microns_per_pixel}};
  write_text(fs::path(a.out) / "grid.json", meta.dump(2) + "\n");
  std::printf("%s: %d x %d grid, %lld patches written, %lld filtered\n",
              slide.slide_id.c_str(), grid.n_cols, grid.n_rows, written, skipped);
}

struct HarvestArgs {
  std::string map, out, patient, cancer_type = "LUAD", prefix, mode = "uniform", name;
  double threshold = 0.5;
  long long n = 120;
  std::uint64_t seed = 7;
};

void run_harvest(const HarvestArgs& a) {
  const TilMap map = read_prob_map(a.map);
  const SlideInfo info{a.patient.empty() ? map.slide_id : a.patient,
                       parse_cancer_type(a.cancer_type), a.prefix};
  HarvestMode mode = HarvestMode::kUniform;
  if (a.mode == "stratified") mode = HarvestMode::kStratified;
  else if (a.mode != "uniform") fail(ErrorCode::kInvalidArgument, "mode must be uniform or stratified");
  AnnotationManifest m;
  m.name = a.name.empty() ? fs::path(a.out).stem().string() : a.name;
  m.records = harvest_semi_auto(map, info, a.threshold, a.n, a.seed, mode);
  write_manifest(m, a.out);
  std::printf("%zu records harvested from %s at t=%g\n", m.records.size(),
              map.slide_id.c_str(), a.threshold);
}

struct MixArgs {
  std::string manual, semi, policy, out;
};

void run_mix(const MixArgs& a) {
  const MixturePolicy policy = a.policy.empty() ? MixturePolicy{} : read_policy(a.policy);
  const auto outcome = assemble_mixture(read_manifest(a.manual), read_manifest(a.semi),
                                        policy, fs::path(a.out).stem().string());
  write_manifest(outcome.manifest, a.out);
  std::printf("%zu records: %zu manual, %zu semi-automatic, %zu semi duplicates dropped\n",
              outcome.manifest.records.size(), outcome.manual_kept, outcome.semi_kept,
              outcome.semi_dropped_as_duplicate);
}

struct SplitArgs {
  std::vector<std::string> manifests;
  std::string out_dir = ".";
  double test_frac = 0.5;
  std::uint64_t seed = 7;
};

void run_split(const SplitArgs& a) {
  std::vector<AnnotationManifest> inputs;
  for (const auto& p : a.manifests) inputs.push_back(read_manifest(p));
  const auto split = split_by_patient(inputs, a.test_frac, a.seed);
  write_manifest(split.train, fs::path(a.out_dir) / "train.jsonl");
  write_manifest(split.test, fs::path(a.out_dir) / "test.jsonl");
  std::printf("train: %zu records, %zu patients; test: %zu records, %zu patients\n",
              split.train.records.size(), split.train.patient_ids().size(),
              split.test.records.size(), split.test.patient_ids().size());
}

json stats_json(const ManifestStats& s) {
  json per_type = json::object();
  for (const auto& [type, n] : s.per_cancer_type) {
    const auto& [pos, neg] = s.per_type_labels.at(type);
    per_type[std::string(to_string(type))] = {{"total", n}, {"positive", pos}, {"negative", neg}};
  }
  return {{"total", s.total},         {"positive", s.positives},
          {"negative", s.negatives},  {"manual", s.manual},
          {"semi_auto", s.semi_auto}, {"per_cancer_type", per_type}};
}

void run_stats(const std::string& manifest) {
  std::cout << stats_json(manifest_stats(read_manifest(manifest))).dump(2) << "\n";
}

struct TrainArgs {
  std::string preset = "compact", manifest, out, pretrained, patches, validation;
  std::uint64_t seed = 7;
  int steps = 0, batch = 0, eval_every = 0;
  double lr = 0.0;
  bool oversample = false;
};

void run_train(const TrainArgs& a) {
  ModelConfig cfg = default_config(Architecture::kCompactRef);
  if (a.preset != "compact") {
    const Preset& p = find_preset(a.preset);
    cfg = default_config(p.architecture);
  }
  if (!a.pretrained.empty()) cfg.pretrained_weights = a.pretrained;
  if (a.steps > 0) cfg.max_steps = a.steps;
  if (a.batch > 0) cfg.batch_size = a.batch;
  if (a.lr > 0) cfg.learning_rate = a.lr;
  if (a.eval_every > 0) cfg.eval_every = a.eval_every;
  cfg.oversample_positive = a.oversample;
  cfg.rng_seed = a.seed;
  AugmentationConfig aug;
  aug.rng_seed = a.seed + 1;

  const AnnotationManifest manifest = read_manifest(a.manifest);
  if (a.preset != "compact") {
    const Preset& p = find_preset(a.preset);
    if (manifest.records.size() != p.expected_records) {
      std::fprintf(stderr, "note: preset %s expects %zu records, manifest has %zu\n",
                   p.name.c_str(), p.expected_records, manifest.records.size());
    }
  }
  const fs::path base = a.patches.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.patches);
  const PatchLoader loader = make_file_loader(base);

  TrainOptions opts;
  if (!a.validation.empty()) {
    ValidationData v;
    for (const auto& r : read_manifest(a.validation).records) {
      v.patches.push_back(loader(r));
      v.labels.push_back(r.label == Label::kPositive);
    }
    opts.validation = std::move(v);
  }
  opts.on_step = [&](const TrainingLogEntry& e) {
    if (e.step % 50 == 0 || e.validation_auc) {
      std::fprintf(stderr, "step %d loss %.5f%s\n", e.step, e.loss,
                   e.validation_auc ? (" val_auc " + std::to_string(*e.validation_auc)).c_str() : "");
    }
    return true;
  };
  const TrainedModel model = train(cfg, aug, manifest, loader, opts);
  save_checkpoint(model, a.out);
  std::printf("checkpoint %s written to %s\n", model.model_id().c_str(), a.out.c_str());
}

json calibration_json(const CalibrationResult& r) {
  json points = json::array();
  for (const auto& p : r.roc.points) {
    points.push_back({{"threshold", p.threshold}, {"fpr", p.fpr}, {"fnr", p.fnr},
                      {"tpr", p.tpr}, {"tp", p.tp}, {"fp", p.fp}, {"tn", p.tn}, {"fn", p.fn}});
  }
  return {{"chosen_threshold", r.chosen_threshold},
          {"criterion_value", r.criterion_value},
          {"method", std::string(to_string(r.method))},
          {"auc", r.roc.auc},
          {"validation_manifest_name", r.validation_manifest_name},
          {"roc", points}};
}

struct CalibrateArgs {
  std::string scores, model, manifest, patches, out, method = "eer";
};

void run_calibrate(const CalibrateArgs& a) {
  ScoredSet set;
  std::string name;
  if (!a.scores.empty()) {
    set = read_scores_csv(a.scores);
    name = fs::path(a.scores).stem().string();
  } else {
    if (a.model.empty() || a.manifest.empty()) {
      fail(ErrorCode::kInvalidArgument, "give --scores or both --model and --manifest");
    }
    const TrainedModel model = load_checkpoint(a.model);
    const auto manifest = read_manifest(a.manifest);
    const PatchLoader loader = make_file_loader(
        a.patches.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.patches));
    for (const auto& r : manifest.records) {
      set.scores.push_back(model.score(loader(r)));
      set.labels.push_back(r.label == Label::kPositive);
    }
    name = manifest.name;
  }
  auto result = youden_threshold(set, parse_threshold_method(a.method));
  result.validation_manifest_name = name;
  write_text(a.out, calibration_json(result).dump(2) + "\n");
  std::printf("threshold %.6f (%s criterion %.6f, AUC %.4f)\n", result.chosen_threshold,
              a.method.c_str(), result.criterion_value, result.roc.auc);
}

struct InferArgs {
  std::string slide, model, out, tissue = "off";
  bool binary = false;
  double threshold = 0.5;
};

void run_infer(const InferArgs& a) {
  const SlideRef slide = load_slide(a.slide);
  const TrainedModel model = load_checkpoint(a.model);
  InferenceOptions opts;
  if (on_off(a.tissue)) opts.tissue_filter = TissueFilterParams{};
  const TilMap map = infer_map(slide, model, build_grid(slide, model.config().patch_px), opts);
  if (a.binary) {
    write_map(binarize(map, a.threshold, slide.slide_id), a.out);
  } else {
    write_map(map, a.out);
  }
  std::printf("%s: %d x %d map written to %s\n", map.slide_id.c_str(), map.n_cols, map.n_rows,
              a.out.c_str());
}

struct ImportArgs {
  std::string png, slide_id, out;
  int patch_px = 100, channel = -1;
};

void run_import(const ImportArgs& a) {
  GrayscaleImportMeta meta;
  meta.slide_id = a.slide_id;
  meta.patch_px = a.patch_px;
  meta.channel = a.channel;
  const TilMap map = import_grayscale_map(a.png, meta);
  write_map(map, a.out);
  std::printf("%s: %d x %d map imported\n", map.slide_id.c_str(), map.n_cols, map.n_rows);
}

struct EvalArgs {
  std::vector<std::string> models;
  std::string test, thresholds, patches, out;
  bool macro = false;
};

void run_eval(const EvalArgs& a) {
  std::vector<TrainedModel> loaded;
  loaded.reserve(a.models.size());
  for (const auto& m : a.models) loaded.push_back(load_checkpoint(m));
  std::vector<NamedModel> named;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    named.push_back({fs::path(a.models[i]).filename().string(), &loaded[i]});
  }
  std::map<std::string, double> thresholds;
  const json thresholds_json = read_json(a.thresholds);
  if (thresholds_json.contains("chosen_threshold")) {
    // A single calibration file applies to every model.
    for (const auto& m : named) thresholds[m.name] = thresholds_json["chosen_threshold"].get<double>();
  } else {
    for (const auto& [k, v] : thresholds_json.items()) {
      thresholds[k] = v.is_object() ? v.at("chosen_threshold").get<double>() : v.get<double>();
    }
  }
  const auto test = read_manifest(a.test);
  const PatchLoader loader = make_file_loader(
      a.patches.empty() ? fs::path(a.test).parent_path() : fs::path(a.patches));
  const auto report = evaluate_models(named, test, thresholds, loader, a.macro);
  write_text(a.out, report_to_json(report) + "\n");
  for (const auto& m : report.models) {
    std::printf("%-20s t=%.4f accuracy %.4f f1 %s\n", m.name.c_str(), m.threshold,
                m.overall.metrics.accuracy,
                m.overall.metrics.f1 ? std::to_string(*m.overall.metrics.f1).c_str() : "n/a");
  }
}

struct RegionArgs {
  std::string model, regions, labels, out, json_out;
  double threshold = 0.5;
};

void run_eval_regions(const RegionArgs& a) {
  const TrainedModel model = load_checkpoint(a.model);
  std::ifstream in(a.labels);
  if (!in) fail(ErrorCode::kUnreadableSource, "cannot open " + a.labels);
  std::vector<RegionRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("region_id", 0) == 0) continue;
    std::stringstream ss(line);
    std::string id, cell;
    std::getline(ss, id, ',');
    std::vector<TilLevel> experts;
    while (std::getline(ss, cell, ',')) experts.push_back(parse_til_level(cell));
    const RgbImage region = read_rgb(fs::path(a.regions) / (id + ".png"));
    records.push_back(make_region_record(id, experts, region_count(model, region, a.threshold)));
  }
  const auto dist = region_distribution(records);
  fs::path json_out = a.json_out;
  if (json_out.empty()) json_out = fs::path(a.out).replace_extension(".json");
  write_distribution(dist, a.out, json_out);
  for (TilLevel level : {TilLevel::kLow, TilLevel::kMedium, TilLevel::kHigh}) {
    const auto& s = dist.summary.at(level);
    std::printf("%-6s n=%zu median %s\n", std::string(to_string(level)).c_str(),
                dist.counts.at(level).size(), s ? std::to_string(s->median).c_str() : "n/a");
  }
}

struct ServeArgs {
  std::string store, listen = "127.0.0.1:8080", static_dir, manifest_dir;
  int preview_max = 200;
};

ReviewHttpServer* g_server = nullptr;

void run_serve(const ServeArgs& a) {
  const auto colon = a.listen.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::kInvalidArgument, "listen must be host:port");
  const std::string host = a.listen.substr(0, colon);
  const int port = std::stoi(a.listen.substr(colon + 1));
  ReviewService service({a.store, a.manifest_dir, a.preview_max});
  std::optional<fs::path> static_dir;
  if (!a.static_dir.empty()) static_dir = a.static_dir;
  ReviewHttpServer server(service, static_dir);
  const int bound = server.bind(host, port);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::printf("serving %zu maps from %s on http://%s:%d/v1\n", service.list_maps().size(),
              a.store.c_str(), host.c_str(), bound);
  std::fflush(stdout);
  server.serve();
  g_server = nullptr;
}

struct AddMapArgs {
  std::string store, map, id, patient, cancer_type, pixel_source, prefix;
};

void run_add_map(const AddMapArgs& a) {
  MapStore store(a.store);
  const TilMap map = read_prob_map(a.map);
  MapMeta meta;
  meta.patient_id = a.patient.empty() ? map.slide_id : a.patient;
  if (!a.cancer_type.empty()) meta.cancer_type = parse_cancer_type(a.cancer_type);
  meta.pixel_source = a.pixel_source;
  meta.patch_uri_prefix = a.prefix;
  const std::string id = a.id.empty() ? fs::path(a.map).stem().string() : a.id;
  store.add(id, map, meta);
  std::printf("map %s added to %s\n", id.c_str(), a.store.c_str());
}

struct SynthArgs {
  std::string out, id = "synth", patient, cancer_type = "LUAD";
  int cols = 10, rows = 10, patch_px = 100;
  double positive_fraction = 0.4;
  std::uint64_t seed = 1;
};

void run_synth(const SynthArgs& a) {
  const auto s = synth::make_random_slide(a.id, a.cols, a.rows, a.patch_px, a.positive_fraction,
                                          a.seed, a.patient, parse_cancer_type(a.cancer_type));
  const fs::path dir = a.out;
  fs::create_directories(dir);
  const auto* source = dynamic_cast<const InMemoryPixelSource*>(s.slide.pixels.get());
  write_png(dir / (a.id + ".png"), source->image());
  const json descriptor = {{"slide_id", s.slide.slide_id},
                           {"patient_id", s.slide.patient_id},
                           {"cancer_type", std::string(to_string(s.slide.cancer_type))},
                           {"magnification", 20.0},
                           {"microns_per_pixel", 0.5},
                           {"pixel_source", a.id + ".png"}};
  write_text(dir / (a.id + ".json"), descriptor.dump(2) + "\n");
  AnnotationManifest truth;
  truth.name = a.id + "-truth";
  truth.records = synth::truth_records(s);
  write_manifest(truth, dir / (a.id + ".truth.jsonl"));
  std::printf("%s: %d x %d slide, %zu truth records in %s\n", a.id.c_str(), a.cols, a.rows,
              truth.records.size(), dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tilpipe: tiling, annotation, training, calibration, inference and review of "
               "TIL maps"};
  app.require_subcommand(1);

  TileArgs tile;
  auto* c = app.add_subcommand("tile", "Cut a slide into non-overlapping patches");
  c->add_option("--slide", tile.slide, "Slide image or JSON descriptor")->required();
  c->add_option("--patch-px", tile.patch_px, "Patch edge in level-0 pixels");
  c->add_option("--out", tile.out, "Output directory")->required();
  c->add_option("--tissue-filter", tile.tissue)->check(CLI::IsMember({"on", "off"}));
  c->callback([&] { run_tile(tile); });

  HarvestArgs harvest;
  c = app.add_subcommand("harvest", "Sample semi-automatic labels from a probability map");
  c->add_option("--map", harvest.map)->required();
  c->add_option("--threshold", harvest.threshold)->check(CLI::Range(0.0, 1.0));
  c->add_option("--n", harvest.n, "Patches to sample");
  c->add_option("--seed", harvest.seed);
  c->add_option("--out", harvest.out)->required();
  c->add_option("--patient", harvest.patient);
  c->add_option("--cancer-type", harvest.cancer_type);
  c->add_option("--patch-prefix", harvest.prefix, "Prefix for patch URIs");
  c->add_option("--mode", harvest.mode)->check(CLI::IsMember({"uniform", "stratified"}));
  c->add_option("--name", harvest.name, "Manifest name");
  c->callback([&] { run_harvest(harvest); });

  MixArgs mix;
  c = app.add_subcommand("mix", "Combine manual and semi-automatic manifests by cancer type");
  c->add_option("--manual", mix.manual)->required();
  c->add_option("--semi", mix.semi)->required();
  c->add_option("--policy", mix.policy, "Policy JSON; default is the standard split");
  c->add_option("--out", mix.out)->required();
  c->callback([&] { run_mix(mix); });

  SplitArgs split;
  c = app.add_subcommand("split", "Split manifests into train and test by patient");
  c->add_option("--manifests", split.manifests)->required();
  c->add_option("--test-frac", split.test_frac)->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", split.seed);
  c->add_option("--out-dir", split.out_dir);
  c->callback([&] { run_split(split); });

  std::string stats_manifest;
  c = app.add_subcommand("stats", "Print label and source counts of a manifest");
  c->add_option("--manifest", stats_manifest)->required();
  c->callback([&] { run_stats(stats_manifest); });

  TrainArgs tr;
  c = app.add_subcommand("train", "Train a patch classifier");
  c->add_option("--preset", tr.preset, "vgg-mix, incep-mix, ... or compact");
  c->add_option("--manifest", tr.manifest)->required();
  c->add_option("--out", tr.out, "Checkpoint directory")->required();
  c->add_option("--seed", tr.seed);
  c->add_option("--pretrained", tr.pretrained, "Weights blob to start from");
  c->add_option("--patches", tr.patches, "Base directory for patch URIs");
  c->add_option("--validation", tr.validation, "Validation manifest for best-AUC selection");
  c->add_option("--steps", tr.steps);
  c->add_option("--batch", tr.batch);
  c->add_option("--lr", tr.lr);
  c->add_option("--eval-every", tr.eval_every);
  c->add_flag("--oversample-positive", tr.oversample);
  c->callback([&] { run_train(tr); });

  CalibrateArgs cal;
  c = app.add_subcommand("calibrate", "Choose a decision threshold on validation scores");
  c->add_option("--scores", cal.scores, "CSV of score,label");
  c->add_option("--model", cal.model, "Checkpoint to score --manifest with");
  c->add_option("--manifest", cal.manifest);
  c->add_option("--patches", cal.patches);
  c->add_option("--method", cal.method)->check(CLI::IsMember({"eer", "youden-j"}));
  c->add_option("--out", cal.out)->required();
  c->callback([&] { run_calibrate(cal); });

  InferArgs inf;
  c = app.add_subcommand("infer", "Produce a TIL map for a slide");
  c->add_option("--slide", inf.slide)->required();
  c->add_option("--model", inf.model)->required();
  c->add_option("--out", inf.out)->required();
  c->add_option("--tissue-filter", inf.tissue)->check(CLI::IsMember({"on", "off"}));
  auto* bin = c->add_flag("--binary", inf.binary, "Write a thresholded map");
  c->add_option("--threshold", inf.threshold)->check(CLI::Range(0.0, 1.0))->needs(bin);
  c->callback([&] { run_infer(inf); });

  ImportArgs imp;
  c = app.add_subcommand("import-map", "Convert a grayscale probability PNG into a map");
  c->add_option("--png", imp.png)->required();
  c->add_option("--slide-id", imp.slide_id)->required();
  c->add_option("--patch-px", imp.patch_px);
  c->add_option("--channel", imp.channel, "Plane of a multi-channel image");
  c->add_option("--out", imp.out)->required();
  c->callback([&] { run_import(imp); });

  EvalArgs ev;
  c = app.add_subcommand("eval", "Patch-level metrics per model and cancer type");
  c->add_option("--models", ev.models)->required();
  c->add_option("--test", ev.test)->required();
  c->add_option("--thresholds", ev.thresholds, "JSON {checkpoint name: threshold} or a calibrate output")->required();
  c->add_option("--patches", ev.patches);
  c->add_flag("--macro-f1", ev.macro);
  c->add_option("--out", ev.out)->required();
  c->callback([&] { run_eval(ev); });

  RegionArgs reg;
  c = app.add_subcommand("eval-regions", "Predicted TIL counts per expert-labelled region");
  c->add_option("--model", reg.model)->required();
  c->add_option("--regions", reg.regions, "Directory of <region_id>.png")->required();
  c->add_option("--labels", reg.labels, "CSV region_id,label[,label...]")->required();
  c->add_option("--threshold", reg.threshold)->check(CLI::Range(0.0, 1.0));
  c->add_option("--out", reg.out, "CSV of label,count")->required();
  c->add_option("--quantiles-out", reg.json_out, "Quantile JSON; defaults next to --out");
  c->callback([&] { run_eval_regions(reg); });

  ServeArgs srv;
  c = app.add_subcommand("serve", "Run the threshold review HTTP service");
  c->add_option("--store", srv.store)->envname("TILPIPE_STORE")->required();
  c->add_option("--listen", srv.listen, "host:port")->envname("TILPIPE_LISTEN");
  c->add_option("--preview-max", srv.preview_max, "Preview cell budget per side")
      ->envname("TILPIPE_PREVIEW_MAX");
  c->add_option("--manifests", srv.manifest_dir, "Committed manifest directory")
      ->envname("TILPIPE_MANIFEST_DIR");
  c->add_option("--static", srv.static_dir, "Directory of UI assets")->envname("TILPIPE_STATIC");
  c->callback([&] { run_serve(srv); });

  AddMapArgs add;
  c = app.add_subcommand("add-map", "Register a map in a review store");
  c->add_option("--store", add.store)->required();
  c->add_option("--map", add.map)->required();
  c->add_option("--id", add.id);
  c->add_option("--patient", add.patient);
  c->add_option("--cancer-type", add.cancer_type);
  c->add_option("--pixel-source", add.pixel_source, "Slide image for patch thumbnails");
  c->add_option("--patch-prefix", add.prefix);
  c->callback([&] { run_add_map(add); });

  SynthArgs syn;
  c = app.add_subcommand("synth", "Write a synthetic slide with ground truth");
  c->add_option("--out", syn.out)->required();
  c->add_option("--id", syn.id);
  c->add_option("--cols", syn.cols);
  c->add_option("--rows", syn.rows);
  c->add_option("--patch-px", syn.patch_px);
  c->add_option("--positive-fraction", syn.positive_fraction)->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", syn.seed);
  c->add_option("--patient", syn.patient);
  c->add_option("--cancer-type", syn.cancer_type);
  c->callback([&] { run_synth(syn); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
