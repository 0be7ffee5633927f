// Copyright 2026 The blurbt Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// blurbt command-line interface.
//
//   blurbt synth --out-dir corpus --seed 7 --tier gaussian:6,fraction=0.1,corrupt
//   blurbt score --manifest corpus/manifest.json --out scores.csv
//   blurbt sweep --manifest corpus/manifest.json --scores scores.csv --out-dir run
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 detector-hook failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blurbt/blur_model.hpp"
#include "blurbt/dataset.hpp"
#include "blurbt/detect_eval.hpp"
#include "blurbt/error.hpp"
#include "blurbt/json_io.hpp"
#include "blurbt/pipeline.hpp"
#include "blurbt/stub_detector.hpp"
#include "blurbt/synth.hpp"

namespace fs = std::filesystem;
using blurbt::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDetector = 3;

// JSON config files: keys are long option names (dashes or underscores),
// nested objects address subcommands, arrays feed vector options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    return collect(app).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

  // Option values excluding output locations and parallelism, which never
  // change results.
  static json collect(const CLI::App* app) {
    json out = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || name == "workers" ||
          name == "out-dir" || name == "out" || opt->count() == 0) {
        continue;
      }
      out[name] = opt->results();
    }
    for (const CLI::App* sub : app->get_subcommands()) out[sub->get_name()] = collect(sub);
    return out;
  }

 private:
  static void flatten(const json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [raw_key, value] : j.items()) {
      std::string key = raw_key;
      std::replace(key.begin(), key.end(), '_', '-');
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      auto scalar = [](const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        return v.dump();
      };
      if (value.is_null()) continue;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct GlobalOptions {
  std::string manifest;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<double> bt_grid{0, 5, 10, 15, 20};
};

std::string cli_hash(const CLI::App& app) {
  return blurbt::content_hash(JsonConfig::collect(&app).dump());
}

fs::path manifest_dir(const std::string& manifest) {
  return fs::absolute(manifest).parent_path();
}

void require(bool cond, const std::string& what) {
  if (!cond) throw CLI::ValidationError(what);
}

std::vector<blurbt::Split> parse_splits(const std::vector<std::string>& names) {
  std::vector<blurbt::Split> out{blurbt::Split::kTraining};
  for (const auto& n : names) {
    const auto s = blurbt::parse_split(n);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

int cmd_score(const CLI::App& app, const GlobalOptions& g, const std::string& image_root,
              const std::string& out) {
  require(!g.manifest.empty(), "--manifest is required");
  const auto manifest = blurbt::load_manifest(g.manifest);
  const fs::path root = image_root.empty() ? manifest_dir(g.manifest) : fs::path(image_root);
  const auto run = blurbt::run_score(manifest, root, g.workers);
  for (const auto& e : run.errors) std::cerr << "error: " << e << "\n";
  const std::string csv = blurbt::scores_to_csv(run.scores);
  if (!out.empty()) {
    blurbt::write_text_file(out, csv);
  } else if (!g.out_dir.empty()) {
    blurbt::write_text_file(fs::path(g.out_dir) / "scores.csv", csv);
  } else {
    std::cout << csv;
  }
  (void)app;
  return run.errors.empty() ? 0 : kExitData;
}

struct SynthOptions {
  int width = 96;
  int height = 96;
  int max_objects = 3;
  std::size_t n_train = 100;
  std::size_t n_val = 25;
  std::size_t n_test = 25;
  std::vector<std::string> tiers;
  std::vector<std::string> eval_tiers;
};

int cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
  require(!g.out_dir.empty(), "--out-dir is required");
  blurbt::CorpusSpec spec;
  spec.seed = g.seed;
  spec.width = o.width;
  spec.height = o.height;
  spec.max_objects = o.max_objects;
  spec.n_train = o.n_train;
  spec.n_val = o.n_val;
  spec.n_test = o.n_test;
  for (const auto& t : o.tiers) spec.train_tiers.push_back(blurbt::parse_tier(t));
  for (const auto& t : o.eval_tiers) spec.eval_tiers.push_back(blurbt::parse_tier(t));
  const auto corpus = blurbt::generate_corpus(spec, g.out_dir, g.workers);
  std::cout << "wrote " << corpus.images.size() << " images, "
            << corpus.manifest.annotations.size() << " annotations to " << g.out_dir << "\n";
  return 0;
}

int cmd_filter(const CLI::App& app, const GlobalOptions& g, const std::string& scores_path,
               const std::optional<double>& single_bt,
               const std::vector<std::string>& extra_splits) {
  require(!g.manifest.empty(), "--manifest is required");
  require(!scores_path.empty(), "--scores is required");
  require(!g.out_dir.empty(), "--out-dir is required");
  const std::vector<double> grid = single_bt ? std::vector<double>{*single_bt} : g.bt_grid;
  const auto manifest = blurbt::load_manifest(g.manifest);
  const auto scores = blurbt::scores_from_csv(blurbt::read_text_file(scores_path));
  const auto splits = parse_splits(extra_splits);
  const json meta = blurbt::make_meta(cli_hash(app));
  std::vector<blurbt::FilterReport> reports;
  json report_list = json::array();
  for (double bt : grid) {
    auto result = blurbt::filter_training(manifest, scores, blurbt::BlurThreshold{bt}, splits);
    const fs::path dir = fs::path(g.out_dir) / ("bt_" + blurbt::bt_label(bt).substr(3));
    blurbt::save_manifest(result.manifest, dir / "manifest.json", std::optional<json>(meta));
    report_list.push_back(blurbt::filter_report_to_json(result.report));
    reports.push_back(std::move(result.report));
  }
  const auto table = blurbt::training_count_table(blurbt::count_table(reports));
  blurbt::write_text_file(fs::path(g.out_dir) / "filter_reports.json",
                          blurbt::dump_json({{"meta", meta}, {"reports", report_list}}));
  blurbt::write_text_file(fs::path(g.out_dir) / "count_table.txt", blurbt::render_text(table));
  blurbt::write_text_file(fs::path(g.out_dir) / "count_table.csv", blurbt::render_csv(table));
  std::cout << blurbt::render_text(table);
  return 0;
}

int cmd_eval(const CLI::App& app, const GlobalOptions& g, const std::string& split,
             const std::string& detections, const std::string& out) {
  require(!g.manifest.empty(), "--manifest is required");
  require(!detections.empty(), "--detections is required");
  const auto manifest = blurbt::load_manifest(g.manifest);
  const auto dets = blurbt::load_detections(detections);
  const auto result = blurbt::evaluate(manifest, blurbt::parse_split(split), dets);
  json j = blurbt::ap_result_to_json(result);
  j["meta"] = blurbt::make_meta(cli_hash(app));
  j["split"] = split;
  const std::string text = blurbt::dump_json(j);
  if (!out.empty()) {
    blurbt::write_text_file(out, text);
  } else if (!g.out_dir.empty()) {
    blurbt::write_text_file(fs::path(g.out_dir) / "ap_result.json", text);
  }
  std::printf("Overall AP      %6.2f\n", result.overall_ap);
  for (const auto& [cat, ap] : result.per_category_ap) {
    std::printf("AP of %-9s %6.2f\n", cat.c_str(), ap);
  }
  return 0;
}

struct SweepOptions {
  std::string scores;
  std::string detector_cmd;
  std::string stub = "colorblob";
  std::string image_root;
  bool eval_test_all = false;
  std::vector<std::string> filter_splits;
};

int cmd_sweep(const GlobalOptions& g, const SweepOptions& o) {
  require(!g.manifest.empty(), "--manifest is required");
  require(!o.scores.empty(), "--scores is required");
  require(!g.out_dir.empty(), "--out-dir is required");
  blurbt::SweepConfig cfg;
  cfg.bt_grid = g.bt_grid;
  cfg.seed = g.seed;
  cfg.workers = g.workers;
  cfg.manifest_path = g.manifest;
  cfg.scores_path = o.scores;
  cfg.out_dir = g.out_dir;
  cfg.image_root = o.image_root;
  cfg.eval_test_all = o.eval_test_all;
  cfg.filter_splits = parse_splits(o.filter_splits);
  if (!o.detector_cmd.empty()) cfg.detector_cmd = o.detector_cmd;
  cfg.stub_detector =
      o.stub == "none" ? blurbt::StubDetector::kNone : blurbt::StubDetector::kColorBlob;
  try {
    blurbt::validate_bt_grid(cfg.bt_grid);
  } catch (const blurbt::Error& e) {
    throw CLI::ValidationError(e.what());
  }
  const auto report = blurbt::run_sweep(cfg);
  blurbt::write_sweep_outputs(report, cfg.out_dir);
  std::cout << blurbt::emit_tables(report).text;
  bool failed = !report.selected_bt;
  for (const auto& c : report.cells) {
    if (!c.valid) {
      std::cerr << "cell " << blurbt::bt_label(c.bt) << " invalid: " << c.error << "\n";
      failed = true;
    }
  }
  return failed ? kExitDetector : 0;
}

int cmd_stub_detect(const GlobalOptions& g, const std::string& split,
                    const std::string& image_root, const std::string& out) {
  require(!g.manifest.empty(), "--manifest is required");
  require(!out.empty(), "--out is required");
  const auto manifest = blurbt::load_manifest(g.manifest);
  const fs::path root = image_root.empty() ? manifest_dir(g.manifest) : fs::path(image_root);
  const auto dets = blurbt::stub_detect(manifest, blurbt::parse_split(split), g.seed, root);
  blurbt::write_text_file(out, blurbt::dump_json(blurbt::detections_to_json(dets)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blur-threshold curation of detection datasets and COCO-style AP evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags override it");
  app.option_defaults()->always_capture_default();

  GlobalOptions g;
  app.add_option("--manifest", g.manifest, "Dataset manifest JSON");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--seed", g.seed, "Seed for all randomness");
  app.add_option("--workers", g.workers, "Worker threads; output does not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_option("--bt-grid", g.bt_grid, "Comma-separated blur thresholds")->delimiter(',');

  auto* score = app.add_subcommand("score", "Laplacian-variance blur score per image");
  std::string score_root, score_out;
  score->add_option("--image-root", score_root, "Base for relative image paths");
  score->add_option("--out", score_out, "Scores CSV path");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic degraded corpus");
  SynthOptions so;
  synth->add_option("--width", so.width)->check(CLI::PositiveNumber);
  synth->add_option("--height", so.height)->check(CLI::PositiveNumber);
  synth->add_option("--max-objects", so.max_objects)->check(CLI::NonNegativeNumber);
  synth->add_option("--train", so.n_train, "Training images");
  synth->add_option("--val", so.n_val, "Validation images");
  synth->add_option("--test", so.n_test, "Testing images");
  synth->add_option("--tier", so.tiers,
                    "Training tier, e.g. gaussian:6,noise=2,fraction=0.1,corrupt");
  synth->add_option("--eval-tier", so.eval_tiers, "Validation/testing tier");

  auto* filter = app.add_subcommand("filter", "Filter the training split per blur threshold");
  std::string filter_scores;
  std::optional<double> filter_bt;
  std::vector<std::string> filter_extra;
  filter->add_option("--scores", filter_scores, "Scores CSV");
  filter->add_option("--bt", filter_bt, "Single threshold (overrides --bt-grid)");
  filter->add_option("--filter-split", filter_extra, "Also filter this split");

  auto* eval = app.add_subcommand("eval", "COCO-style AP of a detection file");
  std::string eval_split = "validation", eval_dets, eval_out;
  eval->add_option("--split", eval_split)
      ->check(CLI::IsMember({"training", "validation", "testing"}));
  eval->add_option("--detections", eval_dets, "Detection JSON");
  eval->add_option("--out", eval_out, "ApResult JSON path");

  auto* sweep = app.add_subcommand("sweep", "Blur-threshold sweep with BT selection");
  SweepOptions sw;
  sweep->add_option("--scores", sw.scores, "Scores CSV");
  sweep->add_option("--detector-cmd", sw.detector_cmd,
                    "Detector command template: {manifest} {split} {out} {seed} {image_root} {bt}");
  sweep->add_option("--stub-detector", sw.stub)->check(CLI::IsMember({"colorblob", "none"}));
  sweep->add_option("--image-root", sw.image_root, "Base for relative image paths");
  sweep->add_flag("--eval-test-all", sw.eval_test_all, "Evaluate testing at every threshold");
  sweep->add_option("--filter-split", sw.filter_splits, "Also filter this split")
      ->check(CLI::IsMember({"validation", "testing"}));

  auto* stub = app.add_subcommand("stub-detect", "Run the colorblob stub detector");
  std::string stub_split = "validation", stub_root, stub_out;
  stub->add_option("--split", stub_split)
      ->check(CLI::IsMember({"training", "validation", "testing"}));
  stub->add_option("--image-root", stub_root, "Base for relative image paths");
  stub->add_option("--out", stub_out, "Detection JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*score) return cmd_score(app, g, score_root, score_out);
    if (*synth) return cmd_synth(g, so);
    if (*filter) return cmd_filter(app, g, filter_scores, filter_bt, filter_extra);
    if (*eval) return cmd_eval(app, g, eval_split, eval_dets, eval_out);
    if (*sweep) return cmd_sweep(g, sw);
    if (*stub) return cmd_stub_detect(g, stub_split, stub_root, stub_out);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const blurbt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == blurbt::ErrorCode::kDetectorFailure ? kExitDetector : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
