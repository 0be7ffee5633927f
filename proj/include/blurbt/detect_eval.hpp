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

// COCO-style box AP: IoU, greedy score-ordered matching, 101-point
// interpolated precision, averaged over IoU 0.50:0.05:0.95 and categories.
//
// Simplifications relative to the reference COCO tooling: no crowd regions,
// no area ranges, no maxDets cap. Categories without ground truth in the
// evaluated split are excluded from the overall mean.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <ranges>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blurbt/dataset.hpp"
#include "blurbt/error.hpp"
#include "blurbt/json_io.hpp"

namespace blurbt {

struct Detection {
  std::string image_id;
  BoundingBox box;
  std::string category;
  double score = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

inline constexpr std::size_t kNumIouThresholds = 10;
inline constexpr std::size_t kNumRecallPoints = 101;

/// 0.50, 0.55, ..., 0.95, each computed as an exact decimal quotient.
inline std::array<double, kNumIouThresholds> iou_thresholds() {
  std::array<double, kNumIouThresholds> t{};
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<double>(50 + 5 * i) / 100.0;
  }
  return t;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

enum class MatchLabel { kTruePositive, kFalsePositive };

struct MatchResult {
  std::size_t detection = 0;  // index into the input detections
  MatchLabel label = MatchLabel::kFalsePositive;
  std::optional<std::size_t> gt;  // matched ground-truth index
  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Matches one image+category. Detections are visited by descending score
/// (ties keep input order); each takes the unmatched ground truth with the
/// highest IoU (ties to the lower index) if that IoU >= iou_thresh.
inline std::vector<MatchResult> match_detections(
    std::span<const BoundingBox> gt, std::span<const BoundingBox> dets,
    std::span<const double> scores, double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<bool> taken(gt.size(), false);
  std::vector<MatchResult> out;
  out.reserve(dets.size());
  for (std::size_t d : order) {
    double best = -1.0;
    std::optional<std::size_t> best_g;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g]) continue;
      const double o = iou(dets[d], gt[g]);
      if (o >= iou_thresh && o > best) {
        best = o;
        best_g = g;
      }
    }
    if (best_g) {
      taken[*best_g] = true;
      out.push_back({d, MatchLabel::kTruePositive, best_g});
    } else {
      out.push_back({d, MatchLabel::kFalsePositive, std::nullopt});
    }
  }
  return out;
}

/// AP on the 0-100 scale for a TP/FP sequence already in global descending
/// score order. nullopt when n_gt == 0 (cell excluded from averaging).
template <std::ranges::sized_range Flags>
std::optional<double> average_precision(const Flags& is_tp, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  const std::size_t n = std::ranges::size(is_tp);
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  std::size_t i = 0;
  for (const bool hit : is_tp) {
    if (hit) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    ++i;
  }
  // Monotone envelope: p(r) = max over r' >= r.
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumRecallPoints; ++k) {
    const double r = static_cast<double>(k) / 100.0;
    // First index whose recall reaches r; no such index contributes 0.
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(kNumRecallPoints) * 100.0;
}

struct ApResult {
  double overall_ap = 0.0;
  std::map<std::string, double> per_category_ap;
  std::map<std::string, std::array<double, kNumIouThresholds>> per_iou_ap;
  std::vector<std::string> categories_without_gt;
  friend bool operator==(const ApResult&, const ApResult&) = default;
};

/// Rejects detections that name unknown images or categories, or carry a
/// score outside [0, 1]. Detections on images outside the split are ignored.
inline ApResult evaluate(const DatasetManifest& manifest, Split split,
                         const DetectionSet& dets) {
  std::unordered_map<std::string, std::size_t> image_index;
  std::vector<std::size_t> split_images;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    image_index.emplace(manifest.images[i].id, i);
    if (manifest.images[i].split == split) split_images.push_back(i);
  }
  const std::set<std::string> known_categories(manifest.categories.begin(),
                                               manifest.categories.end());
  // (image, category) -> indices into dets, input order.
  std::map<std::pair<std::size_t, std::string>, std::vector<std::size_t>> det_cells;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection& d = dets[i];
    const auto it = image_index.find(d.image_id);
    if (it == image_index.end()) {
      throw Error(ErrorCode::kUnknownImage,
                  "detections[" + std::to_string(i) + "]: unknown image '" + d.image_id + "'");
    }
    if (!known_categories.contains(d.category)) {
      throw Error(ErrorCode::kUnknownCategory,
                  "detections[" + std::to_string(i) + "]: unknown category '" + d.category + "'");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "detections[" + std::to_string(i) + "]: score outside [0,1]");
    }
    if (manifest.images[it->second].split != split) continue;
    det_cells[{it->second, d.category}].push_back(i);
  }
  std::map<std::pair<std::size_t, std::string>, std::vector<BoundingBox>> gt_cells;
  for (const auto& a : manifest.annotations) {
    const std::size_t img = image_index.at(a.image_id);
    if (manifest.images[img].split != split) continue;
    gt_cells[{img, a.category}].push_back(a.box);
  }

  const auto thresholds = iou_thresholds();
  ApResult result;
  double sum = 0.0;
  for (const auto& cat : manifest.categories) {
    std::size_t n_gt = 0;
    for (std::size_t img : split_images) {
      const auto it = gt_cells.find({img, cat});
      if (it != gt_cells.end()) n_gt += it->second.size();
    }
    if (n_gt == 0) {
      result.categories_without_gt.push_back(cat);
      continue;
    }
    std::array<double, kNumIouThresholds> per_iou{};
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      struct Scored {
        double score;
        std::size_t input_index;
        bool tp;
      };
      std::vector<Scored> all;
      for (std::size_t img : split_images) {
        const auto dit = det_cells.find({img, cat});
        if (dit == det_cells.end()) continue;
        const auto git = gt_cells.find({img, cat});
        const std::vector<BoundingBox> empty;
        const auto& gts = git == gt_cells.end() ? empty : git->second;
        std::vector<BoundingBox> boxes;
        std::vector<double> scores;
        for (std::size_t di : dit->second) {
          boxes.push_back(dets[di].box);
          scores.push_back(dets[di].score);
        }
        for (const auto& m : match_detections(gts, boxes, scores, thresholds[t])) {
          all.push_back({scores[m.detection], dit->second[m.detection],
                         m.label == MatchLabel::kTruePositive});
        }
      }
      std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.input_index < b.input_index;
      });
      std::vector<bool> seq(all.size());
      for (std::size_t i = 0; i < all.size(); ++i) seq[i] = all[i].tp;
      per_iou[t] = *average_precision(seq, n_gt);
    }
    double cat_sum = 0.0;
    for (double v : per_iou) cat_sum += v;
    const double cat_ap = cat_sum / static_cast<double>(kNumIouThresholds);
    result.per_iou_ap[cat] = per_iou;
    result.per_category_ap[cat] = cat_ap;
    sum += cat_ap;
  }
  if (!result.per_category_ap.empty()) {
    result.overall_ap = sum / static_cast<double>(result.per_category_ap.size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON.

inline DetectionSet detections_from_json(const json& j) {
  const json& list = j.is_object() && j.contains("detections") ? j.at("detections") : j;
  if (!list.is_array()) {
    throw Error(ErrorCode::kParseError, "detections must be a JSON list");
  }
  DetectionSet out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "detections[" + std::to_string(i) + "]";
    try {
      const json& r = list[i];
      Detection d{r.at("image_id").get<std::string>(), box_from_json(r.at("bbox"), where),
                  r.at("category").get<std::string>(), r.at("score").get<double>()};
      const auto& b = d.box;
      if (!std::isfinite(b.x) || !std::isfinite(b.y) || !(b.w >= 0) || !(b.h >= 0) ||
          !std::isfinite(b.w) || !std::isfinite(b.h)) {
        throw Error(ErrorCode::kParseError, where + ": invalid bbox");
      }
      if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0) {
        throw Error(ErrorCode::kParseError, where + ": score outside [0,1]");
      }
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, where + ": " + e.what());
    }
  }
  return out;
}

inline DetectionSet load_detections(const std::filesystem::path& path) {
  return detections_from_json(parse_json_file(path));
}

inline json detections_to_json(const DetectionSet& dets) {
  json list = json::array();
  for (const auto& d : dets) {
    list.push_back({{"image_id", d.image_id},
                    {"bbox", box_to_json(d.box)},
                    {"category", d.category},
                    {"score", d.score}});
  }
  return list;
}

inline std::string iou_key(double t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

inline json evaluation_settings() {
  json thr = json::array();
  for (double t : iou_thresholds()) thr.push_back(t);
  return {{"iou_thresholds", thr},
          {"recall_points", kNumRecallPoints},
          {"interpolation", "monotone-envelope"},
          {"max_dets", nullptr},
          {"area_range", "all"},
          {"crowd_regions", false},
          {"tie_break", "input-order"},
          {"empty_category", "excluded"}};
}

inline json ap_result_to_json(const ApResult& r) {
  json per_cat = json::object();
  for (const auto& [c, v] : r.per_category_ap) per_cat[c] = round9(v);
  json per_iou = json::object();
  const auto thr = iou_thresholds();
  for (const auto& [c, arr] : r.per_iou_ap) {
    json cell = json::object();
    for (std::size_t i = 0; i < arr.size(); ++i) cell[iou_key(thr[i])] = round9(arr[i]);
    per_iou[c] = cell;
  }
  return {{"overall_ap", round9(r.overall_ap)},
          {"per_category_ap", per_cat},
          {"per_iou_ap", per_iou},
          {"categories_without_gt", r.categories_without_gt},
          {"settings", evaluation_settings()}};
}

}  // namespace blurbt
