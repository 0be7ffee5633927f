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

// Score -> filter per blur threshold -> detect -> evaluate -> select, and the
// three report tables.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blurbt/blur_model.hpp"
#include "blurbt/dataset.hpp"
#include "blurbt/detect_eval.hpp"
#include "blurbt/error.hpp"
#include "blurbt/image_io.hpp"
#include "blurbt/json_io.hpp"
#include "blurbt/parallel.hpp"
#include "blurbt/stub_detector.hpp"

namespace blurbt {

struct ScoreRun {
  std::vector<BlurScore> scores;  // manifest order, failed images omitted
  std::vector<std::string> errors;
};

inline ScoreRun run_score(const DatasetManifest& manifest,
                          const std::filesystem::path& image_root, int workers = 1) {
  const std::size_t n = manifest.images.size();
  std::vector<std::optional<BlurScore>> slots(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto& rec = manifest.images[i];
    try {
      slots[i] = blur_score(rec.id, decode_image(resolve_image(image_root, rec)));
    } catch (const Error& e) {
      errors[i] = rec.id + ": " + e.what();
    }
  });
  ScoreRun run;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) run.scores.push_back(std::move(*slots[i]));
    if (!errors[i].empty()) run.errors.push_back(std::move(errors[i]));
  }
  return run;
}

enum class StubDetector { kNone, kColorBlob };

struct SweepConfig {
  std::vector<double> bt_grid{0, 5, 10, 15, 20};
  // Placeholders: {manifest} {split} {out} {seed} {image_root} {bt}.
  std::optional<std::string> detector_cmd;
  StubDetector stub_detector = StubDetector::kColorBlob;
  std::uint64_t seed = 0;
  std::filesystem::path manifest_path;
  std::filesystem::path scores_path;
  std::filesystem::path out_dir;
  std::filesystem::path image_root;  // empty: manifest's directory
  int workers = 1;
  bool eval_test_all = false;
  std::vector<Split> filter_splits{Split::kTraining};
};

inline void validate_bt_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "bt grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    BlurThreshold{grid[i]};
    if (i > 0 && !(grid[i - 1] < grid[i])) {
      throw Error(ErrorCode::kInvalidArgument, "bt grid must be strictly increasing");
    }
  }
}

struct SweepCell {
  double bt = 0.0;
  FilterReport filter;
  bool valid = true;
  std::string error;
  std::optional<ApResult> validation;
  std::optional<ApResult> test;
};

struct SweepReport {
  std::vector<SweepCell> cells;  // grid order
  std::optional<double> selected_bt;
  std::optional<ApResult> test_result;
  std::string config_hash;
};

/// Valid cell with the highest validation overall AP; ties go to the
/// smallest bt.
inline std::optional<double> select_bt(const std::vector<SweepCell>& cells) {
  std::optional<double> best_bt;
  double best_ap = 0.0;
  for (const auto& c : cells) {
    if (!c.valid || !c.validation) continue;
    if (!best_bt || c.validation->overall_ap > best_ap ||
        (c.validation->overall_ap == best_ap && c.bt < *best_bt)) {
      best_bt = c.bt;
      best_ap = c.validation->overall_ap;
    }
  }
  return best_bt;
}

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

inline std::string substitute(std::string tmpl, const std::string& key,
                              const std::string& value) {
  const std::string pat = "{" + key + "}";
  for (std::size_t pos = tmpl.find(pat); pos != std::string::npos;
       pos = tmpl.find(pat, pos + value.size())) {
    tmpl.replace(pos, pat.size(), value);
  }
  return tmpl;
}

inline std::string cell_dir_name(double bt) {
  return "bt_" + bt_label(bt).substr(3);
}

inline std::string config_hash(const SweepConfig& cfg) {
  json grid = json::array();
  for (double b : cfg.bt_grid) grid.push_back(b);
  json splits = json::array();
  for (Split s : cfg.filter_splits) splits.push_back(to_string(s));
  const json j = {
      {"bt_grid", grid},
      {"detector_cmd", cfg.detector_cmd ? json(*cfg.detector_cmd) : json(nullptr)},
      {"stub_detector", cfg.stub_detector == StubDetector::kColorBlob ? "colorblob" : "none"},
      {"seed", cfg.seed},
      {"eval_test_all", cfg.eval_test_all},
      {"filter_splits", splits},
      {"manifest", content_hash(read_text_file(cfg.manifest_path))},
      {"scores", content_hash(read_text_file(cfg.scores_path))}};
  return content_hash(j.dump());
}

}  // namespace detail

/// Runs the configured detector for one cell and split.
inline DetectionSet run_detector(const SweepConfig& cfg, const DatasetManifest& filtered,
                                 const std::filesystem::path& cell_dir,
                                 const std::filesystem::path& image_root, double bt,
                                 Split split) {
  if (cfg.detector_cmd) {
    const auto manifest_path = cell_dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) save_manifest(filtered, manifest_path);
    const auto out_path = cell_dir / ("detections_" + std::string(to_string(split)) + ".json");
    std::string cmd = *cfg.detector_cmd;
    cmd = detail::substitute(cmd, "manifest", detail::shell_quote(manifest_path.string()));
    cmd = detail::substitute(cmd, "split", std::string(to_string(split)));
    cmd = detail::substitute(cmd, "out", detail::shell_quote(out_path.string()));
    cmd = detail::substitute(cmd, "seed", std::to_string(cfg.seed));
    cmd = detail::substitute(cmd, "image_root", detail::shell_quote(image_root.string()));
    cmd = detail::substitute(cmd, "bt", bt_label(bt).substr(3));
    const int status = std::system(cmd.c_str());
    if (status != 0) {
      throw Error(ErrorCode::kDetectorFailure, "detector hook exited with status " +
                                                   std::to_string(status) + " for " +
                                                   cell_dir.filename().string());
    }
    try {
      return load_detections(out_path);
    } catch (const Error& e) {
      throw Error(ErrorCode::kDetectorFailure, std::string("malformed detector output: ") + e.what());
    }
  }
  if (cfg.stub_detector == StubDetector::kColorBlob) {
    DetectionSet dets = stub_detect(filtered, split, cfg.seed, image_root);
    save_manifest(filtered, cell_dir / "manifest.json");
    write_text_file(cell_dir / ("detections_" + std::string(to_string(split)) + ".json"),
                    dump_json(detections_to_json(dets)));
    return dets;
  }
  throw Error(ErrorCode::kInvalidArgument, "no detector configured");
}

inline SweepReport run_sweep(const SweepConfig& cfg) {
  namespace fs = std::filesystem;
  validate_bt_grid(cfg.bt_grid);
  if (!cfg.detector_cmd && cfg.stub_detector == StubDetector::kNone) {
    throw Error(ErrorCode::kInvalidArgument, "either a detector command or a stub detector is required");
  }
  const DatasetManifest manifest = load_manifest(cfg.manifest_path);
  const std::vector<BlurScore> scores = scores_from_csv(read_text_file(cfg.scores_path));
  const fs::path image_root =
      cfg.image_root.empty() ? fs::absolute(cfg.manifest_path).parent_path() : cfg.image_root;

  SweepReport report;
  report.config_hash = detail::config_hash(cfg);
  report.cells.resize(cfg.bt_grid.size());

  // Filtering is data validation: a missing score aborts the whole sweep.
  std::vector<FilterResult> filtered;
  for (double bt : cfg.bt_grid) {
    filtered.push_back(filter_training(manifest, scores, BlurThreshold{bt}, cfg.filter_splits));
  }

  auto cell_path = [&](double bt) { return cfg.out_dir / "cells" / detail::cell_dir_name(bt); };
  auto run_split = [&](std::size_t i, Split split) {
    SweepCell& cell = report.cells[i];
    if (!cell.valid) return;
    try {
      const fs::path dir = cell_path(cell.bt);
      fs::create_directories(dir);
      const DetectionSet dets =
          run_detector(cfg, filtered[i].manifest, dir, image_root, cell.bt, split);
      ApResult r = evaluate(filtered[i].manifest, split, dets);
      (split == Split::kValidation ? cell.validation : cell.test) = std::move(r);
    } catch (const Error& e) {
      cell.valid = false;
      cell.error = std::string(to_string(e.code()));
    }
  };

  for (std::size_t i = 0; i < cfg.bt_grid.size(); ++i) {
    report.cells[i].bt = cfg.bt_grid[i];
    report.cells[i].filter = filtered[i].report;
  }
  parallel_for(cfg.bt_grid.size(), cfg.workers, [&](std::size_t i) {
    run_split(i, Split::kValidation);
    if (cfg.eval_test_all) run_split(i, Split::kTesting);
  });

  report.selected_bt = select_bt(report.cells);
  if (report.selected_bt) {
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      if (report.cells[i].bt != *report.selected_bt) continue;
      if (!cfg.eval_test_all) run_split(i, Split::kTesting);
      if (report.cells[i].test) report.test_result = report.cells[i].test;
    }
  }
  return report;
}

inline json sweep_report_to_json(const SweepReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cell = {{"bt", round9(c.bt)},
                 {"valid", c.valid},
                 {"filter_report", filter_report_to_json(c.filter)},
                 {"validation", c.validation ? ap_result_to_json(*c.validation) : json(nullptr)}};
    if (!c.error.empty()) cell["error"] = c.error;
    if (c.test) cell["test"] = ap_result_to_json(*c.test);
    cells.push_back(cell);
  }
  return {{"meta", make_meta(r.config_hash)},
          {"cells", cells},
          {"selected_bt", r.selected_bt ? json(round9(*r.selected_bt)) : json(nullptr)},
          {"test_result", r.test_result ? ap_result_to_json(*r.test_result) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Tables.

struct Table {
  std::string title;
  std::vector<std::string> header;  // first cell is the row-label column
  std::vector<std::vector<std::string>> rows;
};

inline std::string render_text(const Table& t) {
  std::vector<std::size_t> widths(t.header.size(), 0);
  auto grow = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  };
  grow(t.header);
  for (const auto& row : t.rows) grow(row);
  std::string out = t.title + "\n";
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::string cell = i < row.size() ? row[i] : "";
      const std::string pad(widths[i] - cell.size(), ' ');
      out += i == 0 ? cell + pad : "  " + pad + cell;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
  };
  line(t.header);
  for (const auto& row : t.rows) line(row);
  return out;
}

inline std::string render_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += "\n";
  };
  line(t.header);
  for (const auto& row : t.rows) line(row);
  return out;
}

inline Table training_count_table(const CountTable& counts) {
  Table t{"Training split after blur filtering", {""}, {{"#images"}, {"#food"}, {"#beverage"}}};
  for (const auto& c : counts.columns) {
    t.header.push_back(bt_label(c.bt));
    t.rows[0].push_back(std::to_string(c.images));
    t.rows[1].push_back(std::to_string(c.food));
    t.rows[2].push_back(std::to_string(c.beverage));
  }
  return t;
}

namespace detail {

inline std::vector<std::string> ap_cells(const std::optional<ApResult>& r, bool csv) {
  auto fmt = [&](double v) {
    if (csv) return fixed9(v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  if (!r) return {"invalid", "invalid", "invalid"};
  std::vector<std::string> out{r->per_category_ap.empty() ? "-" : fmt(r->overall_ap)};
  for (const auto cat : {kFood, kBeverage}) {
    const auto it = r->per_category_ap.find(std::string(cat));
    out.push_back(it == r->per_category_ap.end() ? "-" : fmt(it->second));
  }
  return out;
}

inline Table ap_table(std::string title, const std::vector<std::pair<double, std::optional<ApResult>>>& cols,
                      bool csv) {
  Table t{std::move(title), {""}, {{"Overall AP"}, {"AP of food"}, {"AP of beverage"}}};
  for (const auto& [bt, r] : cols) {
    t.header.push_back(bt_label(bt));
    const auto cells = ap_cells(r, csv);
    for (std::size_t k = 0; k < 3; ++k) t.rows[k].push_back(cells[k]);
  }
  return t;
}

}  // namespace detail

struct Tables {
  std::string text;
  std::string count_csv;
  std::string validation_csv;
  std::string test_csv;
};

inline Tables emit_tables(const SweepReport& report) {
  std::vector<FilterReport> filters;
  std::vector<std::pair<double, std::optional<ApResult>>> val_cols;
  for (const auto& c : report.cells) {
    filters.push_back(c.filter);
    val_cols.emplace_back(c.bt, c.valid ? c.validation : std::nullopt);
  }
  std::vector<std::pair<double, std::optional<ApResult>>> test_cols;
  if (report.selected_bt) test_cols.emplace_back(*report.selected_bt, report.test_result);

  const Table counts = training_count_table(count_table(filters));
  const char* val_title = "Validation AP by blur threshold";
  const char* test_title = "Testing AP at the selected blur threshold";
  Tables out;
  out.text = render_text(counts) + "\n" +
             render_text(detail::ap_table(val_title, val_cols, false)) + "\n" +
             render_text(detail::ap_table(test_title, test_cols, false));
  out.count_csv = render_csv(counts);
  out.validation_csv = render_csv(detail::ap_table(val_title, val_cols, true));
  out.test_csv = render_csv(detail::ap_table(test_title, test_cols, true));
  return out;
}

inline void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& out_dir) {
  const Tables t = emit_tables(report);
  write_text_file(out_dir / "sweep_report.json", dump_json(sweep_report_to_json(report)));
  write_text_file(out_dir / "tables.txt", t.text);
  write_text_file(out_dir / "count_table.csv", t.count_csv);
  write_text_file(out_dir / "validation_table.csv", t.validation_csv);
  write_text_file(out_dir / "test_table.csv", t.test_csv);
}

}  // namespace blurbt
