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

// Dataset manifest schema, blur-threshold filtering of the training split,
// and the per-threshold count statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "blurbt/blur_model.hpp"
#include "blurbt/error.hpp"
#include "blurbt/json_io.hpp"

namespace blurbt {

inline constexpr std::string_view kFood = "food";
inline constexpr std::string_view kBeverage = "beverage";

enum class Split { kTraining, kValidation, kTesting };

inline constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTraining: return "training";
    case Split::kValidation: return "validation";
    case Split::kTesting: return "testing";
  }
  return "";
}

inline Split parse_split(std::string_view s) {
  if (s == "training") return Split::kTraining;
  if (s == "validation") return Split::kValidation;
  if (s == "testing") return Split::kTesting;
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + std::string(s) + "'");
}

/// Axis-aligned box; (x, y) is the top-left corner, all in pixels.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Annotation {
  std::string image_id;
  BoundingBox box;
  std::string category;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ImageRecord {
  std::string id;
  std::string path;
  int width = 0;
  int height = 0;
  Split split = Split::kTraining;
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
  std::vector<ImageRecord> images;
  std::vector<Annotation> annotations;
  std::vector<std::string> categories{std::string(kFood), std::string(kBeverage)};

  const ImageRecord* find_image(std::string_view id) const {
    for (const auto& img : images) {
      if (img.id == id) return &img;
    }
    return nullptr;
  }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

namespace detail {

inline bool valid_id(std::string_view id) {
  return !id.empty() && id.find_first_of(",\"\r\n") == std::string_view::npos;
}

}  // namespace detail

/// Throws Error naming the offending record index on the first violation.
inline void validate_manifest(const DatasetManifest& m) {
  std::set<std::string> categories;
  for (std::size_t i = 0; i < m.categories.size(); ++i) {
    if (m.categories[i].empty() || !categories.insert(m.categories[i]).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "categories[" + std::to_string(i) + "]: empty or duplicate");
    }
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    const auto& img = m.images[i];
    const std::string where = "images[" + std::to_string(i) + "]";
    if (!detail::valid_id(img.id)) {
      throw Error(ErrorCode::kInvalidArgument, where + ": invalid id '" + img.id + "'");
    }
    if (img.width < 1 || img.height < 1) {
      throw Error(ErrorCode::kZeroDimension, where + ": non-positive dimensions");
    }
    if (!index.emplace(img.id, i).second) {
      throw Error(ErrorCode::kDuplicateId, where + ": duplicate id '" + img.id + "'");
    }
  }
  for (std::size_t i = 0; i < m.annotations.size(); ++i) {
    const auto& a = m.annotations[i];
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const auto it = index.find(a.image_id);
    if (it == index.end()) {
      throw Error(ErrorCode::kDanglingAnnotation,
                  where + ": unknown image '" + a.image_id + "'");
    }
    if (!categories.contains(a.category)) {
      throw Error(ErrorCode::kUnknownCategory,
                  where + ": unknown category '" + a.category + "'");
    }
    const auto& img = m.images[it->second];
    const auto& b = a.box;
    const bool finite = std::isfinite(b.x) && std::isfinite(b.y) &&
                        std::isfinite(b.w) && std::isfinite(b.h);
    if (!finite || b.x < 0 || b.y < 0 || !(b.w > 0) || !(b.h > 0) ||
        b.x + b.w > img.width || b.y + b.h > img.height) {
      throw Error(ErrorCode::kBoxOutOfBounds,
                  where + ": box outside image '" + img.id + "'");
    }
  }
}

inline BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::kParseError, where + ": bbox must be [x,y,w,h]");
  }
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw Error(ErrorCode::kParseError, where + ": bbox must be numeric");
    }
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>()};
}

inline json box_to_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

inline DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    if (!j.is_object()) throw Error(ErrorCode::kParseError, "manifest must be an object");
    if (j.contains("categories")) {
      m.categories = j.at("categories").get<std::vector<std::string>>();
    }
    const json& images = j.at("images");
    for (std::size_t i = 0; i < images.size(); ++i) {
      const json& r = images[i];
      ImageRecord rec;
      rec.id = r.at("id").get<std::string>();
      rec.path = r.at("path").get<std::string>();
      rec.width = r.at("width").get<int>();
      rec.height = r.at("height").get<int>();
      try {
        rec.split = parse_split(r.at("split").get<std::string>());
      } catch (const Error& e) {
        throw Error(ErrorCode::kParseError, "images[" + std::to_string(i) + "]: " + e.what());
      }
      m.images.push_back(std::move(rec));
    }
    const json& anns = j.at("annotations");
    for (std::size_t i = 0; i < anns.size(); ++i) {
      const json& r = anns[i];
      const std::string where = "annotations[" + std::to_string(i) + "]";
      m.annotations.push_back({r.at("image_id").get<std::string>(),
                               box_from_json(r.at("bbox"), where),
                               r.at("category").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(parse_json_file(path));
}

/// Canonical form: sorted keys (nlohmann object ordering), records in
/// manifest order.
inline json manifest_to_json(const DatasetManifest& m) {
  json images = json::array();
  for (const auto& img : m.images) {
    images.push_back({{"id", img.id},
                      {"path", img.path},
                      {"width", img.width},
                      {"height", img.height},
                      {"split", to_string(img.split)}});
  }
  json anns = json::array();
  for (const auto& a : m.annotations) {
    anns.push_back({{"image_id", a.image_id},
                    {"bbox", box_to_json(a.box)},
                    {"category", a.category}});
  }
  return {{"images", images}, {"annotations", anns}, {"categories", m.categories}};
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path,
                          const std::optional<json>& meta = std::nullopt) {
  json j = manifest_to_json(m);
  if (meta) j["meta"] = *meta;
  write_text_file(path, dump_json(j));
}

// ---------------------------------------------------------------------------
// Scores CSV: "image_id,variance_of_laplacian", 9 decimals.

inline std::string scores_to_csv(const std::vector<BlurScore>& scores) {
  std::string out = "image_id,variance_of_laplacian\n";
  for (const auto& s : scores) {
    out += s.image_id + "," + fixed9(s.variance_of_laplacian) + "\n";
  }
  return out;
}

inline std::vector<BlurScore> scores_from_csv(std::string_view text) {
  std::vector<BlurScore> scores;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "image_id,variance_of_laplacian") continue;
    const auto comma = line.rfind(',');
    const std::string where = "scores line " + std::to_string(lineno);
    if (comma == std::string::npos || comma == 0) {
      throw Error(ErrorCode::kParseError, where + ": expected image_id,score");
    }
    const std::string value = line.substr(comma + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, where + ": bad score '" + value + "'");
    }
    if (used != value.size() || !std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kParseError, where + ": bad score '" + value + "'");
    }
    scores.push_back({line.substr(0, comma), v});
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Filtering.

struct ObjectCounts {
  std::size_t images = 0;
  std::size_t food = 0;
  std::size_t beverage = 0;
  std::size_t annotations = 0;
  friend bool operator==(const ObjectCounts&, const ObjectCounts&) = default;
};

/// Image and annotation counts of one split, tallied independently: images
/// without objects still count as images.
inline ObjectCounts split_counts(const DatasetManifest& m, Split split) {
  ObjectCounts c;
  std::unordered_set<std::string> ids;
  for (const auto& img : m.images) {
    if (img.split == split) {
      ++c.images;
      ids.insert(img.id);
    }
  }
  for (const auto& a : m.annotations) {
    if (!ids.contains(a.image_id)) continue;
    ++c.annotations;
    if (a.category == kFood) ++c.food;
    if (a.category == kBeverage) ++c.beverage;
  }
  return c;
}

struct FilterReport {
  double bt = 0.0;
  std::size_t kept_images = 0;
  std::size_t kept_food = 0;
  std::size_t kept_beverage = 0;
  std::size_t kept_annotations = 0;
  ObjectCounts unfiltered;
  std::vector<std::string> rejected_image_ids;
  friend bool operator==(const FilterReport&, const FilterReport&) = default;
};

struct FilterResult {
  DatasetManifest manifest;
  FilterReport report;
};

/// Drops training images scoring strictly below bt, with their annotations.
/// Validation and testing records pass through untouched and in order unless
/// listed in `splits`; the report always describes the training split.
inline FilterResult filter_training(const DatasetManifest& m,
                                    const std::vector<BlurScore>& scores,
                                    const BlurThreshold& bt,
                                    const std::vector<Split>& splits = {Split::kTraining}) {
  std::unordered_map<std::string, double> by_id;
  by_id.reserve(scores.size());
  for (const auto& s : scores) by_id[s.image_id] = s.variance_of_laplacian;
  auto filtered = [&](Split s) {
    return std::find(splits.begin(), splits.end(), s) != splits.end();
  };

  FilterResult result;
  result.manifest.categories = m.categories;
  FilterReport& rep = result.report;
  rep.bt = bt.value();
  rep.unfiltered = split_counts(m, Split::kTraining);

  std::unordered_set<std::string> rejected;
  for (const auto& img : m.images) {
    if (filtered(img.split)) {
      const auto it = by_id.find(img.id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::kMissingScore,
                    "no blur score for " + std::string(to_string(img.split)) +
                        " image '" + img.id + "'");
      }
      if (is_rejected(BlurScore{img.id, it->second}, bt)) {
        rejected.insert(img.id);
        if (img.split == Split::kTraining) rep.rejected_image_ids.push_back(img.id);
        continue;
      }
    }
    if (img.split == Split::kTraining) ++rep.kept_images;
    result.manifest.images.push_back(img);
  }
  std::unordered_set<std::string> training_ids;
  for (const auto& img : result.manifest.images) {
    if (img.split == Split::kTraining) training_ids.insert(img.id);
  }
  for (const auto& a : m.annotations) {
    if (rejected.contains(a.image_id)) continue;
    result.manifest.annotations.push_back(a);
    if (!training_ids.contains(a.image_id)) continue;
    ++rep.kept_annotations;
    if (a.category == kFood) ++rep.kept_food;
    if (a.category == kBeverage) ++rep.kept_beverage;
  }
  return result;
}

inline json filter_report_to_json(const FilterReport& r) {
  return {{"bt", round9(r.bt)},
          {"kept_images", r.kept_images},
          {"kept_food", r.kept_food},
          {"kept_beverage", r.kept_beverage},
          {"kept_annotations", r.kept_annotations},
          {"unfiltered",
           {{"images", r.unfiltered.images},
            {"food", r.unfiltered.food},
            {"beverage", r.unfiltered.beverage},
            {"annotations", r.unfiltered.annotations}}},
          {"rejected_image_ids", r.rejected_image_ids}};
}

// ---------------------------------------------------------------------------
// Count table: rows #images / #food / #beverage, one column per BT.

struct CountColumn {
  double bt = 0.0;
  std::size_t images = 0;
  std::size_t food = 0;
  std::size_t beverage = 0;
  friend bool operator==(const CountColumn&, const CountColumn&) = default;
};

struct CountTable {
  std::vector<CountColumn> columns;
};

inline CountTable count_table(const std::vector<FilterReport>& reports) {
  CountTable t;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i > 0 && !(reports[i - 1].bt < reports[i].bt)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "filter reports must be sorted by strictly increasing bt");
    }
    const auto& r = reports[i];
    t.columns.push_back({r.bt, r.kept_images, r.kept_food, r.kept_beverage});
  }
  return t;
}

/// "BT=10", "BT=2.5".
inline std::string bt_label(double bt) {
  std::ostringstream ss;
  ss.precision(12);
  ss << "BT=" << bt;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Seeded split assignment for synthetic corpora.

namespace detail {

// Unbiased draw in [0, n) by rejection; portable unlike
// std::uniform_int_distribution.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

/// Shuffles n items with the seed and assigns the first n_train to training,
/// the next n_val to validation, the rest to testing. Returns split per item.
inline std::vector<Split> random_split(std::size_t n, std::size_t n_train,
                                       std::size_t n_val, std::uint64_t seed) {
  if (n_train + n_val > n) {
    throw Error(ErrorCode::kInvalidArgument, "split sizes exceed item count");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  detail::seeded_shuffle(order, seed);
  std::vector<Split> out(n, Split::kTesting);
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_train) {
      out[order[k]] = Split::kTraining;
    } else if (k < n_train + n_val) {
      out[order[k]] = Split::kValidation;
    }
  }
  return out;
}

}  // namespace blurbt
