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

// Deterministic non-learned "colorblob" detector for synthetic corpora.
//
// Pixels are assigned to a category by intensity band, grouped into
// 4-connected components, and each component's bounding box is widened by a
// per-category margin fitted on the training split: the mean difference
// between an annotated box and the component that best overlaps it. Labels
// on the training split therefore shape the detector, which is what makes
// training-set filtering observable downstream.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blurbt/blur_model.hpp"
#include "blurbt/dataset.hpp"
#include "blurbt/detect_eval.hpp"
#include "blurbt/image.hpp"
#include "blurbt/image_io.hpp"
#include "blurbt/synth.hpp"

namespace blurbt {

inline constexpr double kFoodBandMin = (kFoodIntensity + kBackgroundMean +
                                        kBackgroundClip * kBackgroundAmplitude) / 2.0;
inline constexpr double kBeverageBandMax = (kBeverageIntensity + kBackgroundMean -
                                            kBackgroundClip * kBackgroundAmplitude) / 2.0;
inline constexpr std::size_t kMinComponentArea = 12;
inline constexpr double kFitMinIou = 0.1;

struct Component {
  BoundingBox box;
  std::size_t area = 0;
};

/// 4-connected components of pixels in the category's intensity band,
/// in raster order of their first pixel.
inline std::vector<Component> find_components(const GrayImage& img,
                                              const std::string& category) {
  const int w = img.width();
  const int h = img.height();
  auto in_band = [&](double v) {
    if (category == kFood) return v >= kFoodBandMin;
    if (category == kBeverage) return v <= kBeverageBandMax;
    return false;
  };
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<Component> out;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (seen[idx] || !in_band(img.at(x, y))) continue;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      std::size_t area = 0;
      seen[idx] = 1;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          const std::size_t n = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (seen[n] || !in_band(img.at(nx[k], ny[k]))) continue;
          seen[n] = 1;
          stack.emplace_back(nx[k], ny[k]);
        }
      }
      if (area < kMinComponentArea) continue;
      out.push_back({{static_cast<double>(x0), static_cast<double>(y0),
                      static_cast<double>(x1 - x0 + 1), static_cast<double>(y1 - y0 + 1)},
                     area});
    }
  }
  return out;
}

struct ColorBlobModel {
  struct Margin {
    double dw = 0.0;
    double dh = 0.0;
    std::size_t samples = 0;
    friend bool operator==(const Margin&, const Margin&) = default;
  };
  std::map<std::string, Margin> margins;
  friend bool operator==(const ColorBlobModel&, const ColorBlobModel&) = default;
};

inline std::filesystem::path resolve_image(const std::filesystem::path& image_root,
                                           const ImageRecord& rec) {
  const std::filesystem::path p(rec.path);
  return p.is_absolute() ? p : image_root / p;
}

/// Fits per-category box margins on the training split. Categories without
/// usable samples keep a zero margin.
inline ColorBlobModel fit_colorblob(const DatasetManifest& manifest,
                                    const std::filesystem::path& image_root) {
  std::map<std::string, std::vector<const Annotation*>> by_image;
  for (const auto& a : manifest.annotations) by_image[a.image_id].push_back(&a);
  struct Acc {
    double dw = 0.0;
    double dh = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& rec : manifest.images) {
    if (rec.split != Split::kTraining) continue;
    const auto it = by_image.find(rec.id);
    if (it == by_image.end()) continue;
    const GrayImage img = decode_image(resolve_image(image_root, rec));
    std::map<std::string, std::vector<Component>> comps;
    for (const Annotation* a : it->second) {
      auto [cit, fresh] = comps.try_emplace(a->category);
      if (fresh) cit->second = find_components(img, a->category);
      const Component* best = nullptr;
      double best_iou = kFitMinIou;
      for (const auto& c : cit->second) {
        const double o = iou(a->box, c.box);
        if (o >= best_iou) {
          best_iou = o;
          best = &c;
        }
      }
      if (!best) continue;
      Acc& s = acc[a->category];
      s.dw += a->box.w - best->box.w;
      s.dh += a->box.h - best->box.h;
      ++s.n;
    }
  }
  ColorBlobModel model;
  for (const auto& cat : manifest.categories) {
    const auto it = acc.find(cat);
    if (it == acc.end() || it->second.n == 0) {
      model.margins[cat] = {};
      continue;
    }
    const double n = static_cast<double>(it->second.n);
    model.margins[cat] = {it->second.dw / n, it->second.dh / n, it->second.n};
  }
  return model;
}

/// Detections for one image; score is the component's fill ratio, scaled by
/// a seeded factor in (1 - 1e-6, 1] so that scores are distinct.
inline DetectionSet detect_colorblob(const ColorBlobModel& model, const std::string& image_id,
                                     const GrayImage& img, std::uint64_t seed) {
  DetectionSet out;
  GaussianNoise jitter(derive_seed(seed, image_id));
  for (const auto& [cat, margin] : model.margins) {
    for (const auto& c : find_components(img, cat)) {
      const double x0 = std::max(0.0, c.box.x - margin.dw / 2.0);
      const double y0 = std::max(0.0, c.box.y - margin.dh / 2.0);
      const double x1 = std::min<double>(img.width(), c.box.x + c.box.w + margin.dw / 2.0);
      const double y1 = std::min<double>(img.height(), c.box.y + c.box.h + margin.dh / 2.0);
      if (!(x1 > x0) || !(y1 > y0)) continue;
      const double fill = static_cast<double>(c.area) / c.box.area();
      const double u = std::min(1.0, std::abs(jitter.next()) / 8.0);
      out.push_back({image_id, {x0, y0, x1 - x0, y1 - y0}, cat, fill * (1.0 - 1e-6 * u)});
    }
  }
  return out;
}

/// Fits on the manifest's training split, then detects on every image of
/// `split` in manifest order.
inline DetectionSet stub_detect(const DatasetManifest& manifest, Split split,
                                std::uint64_t seed, const std::filesystem::path& image_root) {
  const ColorBlobModel model = fit_colorblob(manifest, image_root);
  DetectionSet out;
  for (const auto& rec : manifest.images) {
    if (rec.split != split) continue;
    const GrayImage img = decode_image(resolve_image(image_root, rec));
    auto dets = detect_colorblob(model, rec.id, img, seed);
    out.insert(out.end(), dets.begin(), dets.end());
  }
  return out;
}

}  // namespace blurbt
