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

// Synthetic detection corpora: textured gray scenes with planted flat
// rectangles (bright = food, dark = beverage), degraded per tier with the
// blur model, written as PGM + manifest + regeneration sidecar.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blurbt/blur_model.hpp"
#include "blurbt/dataset.hpp"
#include "blurbt/error.hpp"
#include "blurbt/image.hpp"
#include "blurbt/image_io.hpp"
#include "blurbt/json_io.hpp"
#include "blurbt/parallel.hpp"

namespace blurbt {

// Scene palette. The stub detector keys on the same bands.
inline constexpr double kFoodIntensity = 220.0;
inline constexpr double kBeverageIntensity = 30.0;
inline constexpr double kBackgroundMean = 125.0;
inline constexpr double kBackgroundAmplitude = 10.0;
inline constexpr double kBackgroundClip = 2.5;  // in amplitude units
inline constexpr double kCorruptionInflation = 1.8;

struct PlantedObject {
  BoundingBox box;
  std::string category;
};

struct Scene {
  GrayImage image;
  std::vector<PlantedObject> objects;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline bool overlaps_with_gap(const BoundingBox& a, const BoundingBox& b, double gap) {
  return a.x < b.x + b.w + gap && b.x < a.x + a.w + gap &&
         a.y < b.y + b.h + gap && b.y < a.y + a.h + gap;
}

}  // namespace detail

/// Sharp scene: clipped Gaussian texture background plus 1..max_objects
/// non-overlapping integer-aligned rectangles.
inline Scene make_scene(int width, int height, int max_objects, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GaussianNoise texture(detail::splitmix64(seed));
  Scene scene{GrayImage(width, height, kBackgroundMean), {}};
  for (double& v : scene.image.pixels()) {
    const double n = std::clamp(texture.next(), -kBackgroundClip, kBackgroundClip);
    v = kBackgroundMean + kBackgroundAmplitude * n;
  }
  const int extent = std::min(width, height);
  const int min_side = std::max(4, extent / 8);
  const int max_side = std::max(min_side, (extent * 3) / 10);
  const int margin = std::max(1, extent / 32);
  const int wanted = max_objects < 1 ? 0 : detail::uniform_int(rng, 1, max_objects);
  for (int k = 0; k < wanted; ++k) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int w = detail::uniform_int(rng, min_side, max_side);
      const int h = detail::uniform_int(rng, min_side, max_side);
      if (w + 2 * margin > width || h + 2 * margin > height) break;
      const int x = detail::uniform_int(rng, margin, width - margin - w);
      const int y = detail::uniform_int(rng, margin, height - margin - h);
      const BoundingBox box{static_cast<double>(x), static_cast<double>(y),
                            static_cast<double>(w), static_cast<double>(h)};
      bool clash = false;
      for (const auto& o : scene.objects) {
        if (detail::overlaps_with_gap(box, o.box, 2.0 * margin + 2.0)) clash = true;
      }
      if (clash) continue;
      const bool food = (rng() >> 63) == 0;
      const double level = food ? kFoodIntensity : kBeverageIntensity;
      for (int yy = y; yy < y + h; ++yy) {
        for (int xx = x; xx < x + w; ++xx) scene.image.at(xx, yy) = level;
      }
      scene.objects.push_back({box, std::string(food ? kFood : kBeverage)});
      break;
    }
  }
  return scene;
}

/// One degradation class of a corpus split.
struct Tier {
  KernelFamily kernel = BoxBlur{1};
  double noise_sigma = 0.0;
  double fraction = 0.0;
  bool corrupt_labels = false;
  friend bool operator==(const Tier&, const Tier&) = default;
};

inline Tier sharp_tier() { return Tier{BoxBlur{1}, 0.0, 1.0, false}; }

/// "gaussian:2", "box:5", "motion:9:30", "none", each optionally followed
/// by ",noise=<s>", ",fraction=<f>", ",corrupt".
inline Tier parse_tier(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tier");
  std::vector<std::string> kf;
  std::stringstream ks(parts[0]);
  while (std::getline(ks, item, ':')) kf.push_back(item);
  Tier t;
  auto num = [&](std::size_t i) {
    if (i >= kf.size()) {
      throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': missing kernel parameter");
    }
    try {
      return std::stod(kf[i]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': bad number");
    }
  };
  if (kf.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': missing kernel family");
  }
  if (kf[0] == "none") {
    t.kernel = BoxBlur{1};
  } else if (kf[0] == "gaussian") {
    t.kernel = GaussianBlur{num(1)};
  } else if (kf[0] == "box") {
    t.kernel = BoxBlur{static_cast<int>(num(1))};
  } else if (kf[0] == "motion") {
    t.kernel = MotionBlur{num(1), kf.size() > 2 ? num(2) : 0.0};
  } else {
    throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': unknown kernel family");
  }
  t.fraction = 1.0;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    const std::string key = parts[i].substr(0, eq);
    if (key == "corrupt" && eq == std::string::npos) {
      t.corrupt_labels = true;
      continue;
    }
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': bad option " + parts[i]);
    }
    double v = 0.0;
    try {
      v = std::stod(parts[i].substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': bad number");
    }
    if (key == "noise") {
      t.noise_sigma = v;
    } else if (key == "fraction") {
      t.fraction = v;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': unknown option " + key);
    }
  }
  if (!(t.noise_sigma >= 0.0) || !(t.fraction >= 0.0 && t.fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tier '" + text + "': out-of-range option");
  }
  make_kernel(DegradationSpec{t.kernel, t.noise_sigma, 0});
  return t;
}

inline json kernel_params_json(const KernelFamily& k) {
  struct {
    json operator()(const GaussianBlur& g) const {
      return {{"sigma", g.sigma}, {"truncation_sigmas", kGaussianTruncationSigmas}};
    }
    json operator()(const BoxBlur& b) const { return {{"size", b.size}}; }
    json operator()(const MotionBlur& m) const {
      return {{"length", m.length}, {"angle_deg", m.angle_deg}};
    }
  } visitor;
  return std::visit(visitor, k);
}

inline json tier_to_json(const Tier& t) {
  return {{"kernel_family", family_name(t.kernel)},
          {"params", kernel_params_json(t.kernel)},
          {"noise_sigma", t.noise_sigma},
          {"fraction", t.fraction},
          {"corrupt_labels", t.corrupt_labels}};
}

struct CorpusSpec {
  std::uint64_t seed = 0;
  int width = 96;
  int height = 96;
  int max_objects = 3;
  std::size_t n_train = 100;
  std::size_t n_val = 25;
  std::size_t n_test = 25;
  std::vector<Tier> train_tiers;
  std::vector<Tier> eval_tiers;
};

struct CorpusImage {
  std::string id;
  Split split = Split::kTraining;
  int tier = -1;  // -1: sharp remainder
  std::uint64_t scene_seed = 0;
  std::uint64_t noise_seed = 0;
};

struct Corpus {
  DatasetManifest manifest;
  std::vector<CorpusImage> images;
  json sidecar;
};

namespace detail {

// First floor(fraction * n) shuffled slots go to tier 0, the next to tier 1,
// and so on; leftovers stay sharp.
inline std::vector<int> assign_tiers(std::size_t n, const std::vector<Tier>& tiers,
                                     std::uint64_t seed) {
  double total = 0.0;
  for (const auto& t : tiers) total += t.fraction;
  if (total > 1.0 + 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "tier fractions sum above 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  seeded_shuffle(order, seed);
  std::vector<int> out(n, -1);
  std::size_t pos = 0;
  for (std::size_t t = 0; t < tiers.size(); ++t) {
    const auto count = static_cast<std::size_t>(
        std::floor(tiers[t].fraction * static_cast<double>(n) + 1e-9));
    for (std::size_t k = 0; k < count && pos < n; ++k) out[order[pos++]] = static_cast<int>(t);
  }
  return out;
}

inline BoundingBox inflate_within(const BoundingBox& b, double factor, int width,
                                  int height) {
  const double cx = b.x + b.w / 2.0;
  const double cy = b.y + b.h / 2.0;
  const double x0 = std::max(0.0, cx - factor * b.w / 2.0);
  const double y0 = std::max(0.0, cy - factor * b.h / 2.0);
  const double x1 = std::min(static_cast<double>(width), cx + factor * b.w / 2.0);
  const double y1 = std::min(static_cast<double>(height), cy + factor * b.h / 2.0);
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace detail

/// Generates the corpus entirely in memory-independent order: every image
/// depends only on (seed, image id), so worker count never changes output.
/// Writes <out_dir>/images/*.pgm, manifest.json and synth.json.
inline Corpus generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir,
                              int workers = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  Corpus corpus;
  struct SplitPlan {
    Split split;
    std::size_t count;
    const char* prefix;
    const std::vector<Tier>* tiers;
  };
  const SplitPlan plans[] = {{Split::kTraining, spec.n_train, "train", &spec.train_tiers},
                             {Split::kValidation, spec.n_val, "val", &spec.eval_tiers},
                             {Split::kTesting, spec.n_test, "test", &spec.eval_tiers}};
  for (const auto& plan : plans) {
    const auto tiers = detail::assign_tiers(
        plan.count, *plan.tiers, derive_seed(spec.seed, std::string("tiers:") + plan.prefix));
    for (std::size_t i = 0; i < plan.count; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04zu", plan.prefix, i);
      corpus.images.push_back({id, plan.split, tiers[i],
                               derive_seed(spec.seed, std::string("scene:") + id),
                               derive_seed(spec.seed, id)});
    }
  }

  std::vector<std::vector<Annotation>> anns(corpus.images.size());
  parallel_for(corpus.images.size(), workers, [&](std::size_t i) {
    const CorpusImage& ci = corpus.images[i];
    const auto& tiers = ci.split == Split::kTraining ? spec.train_tiers : spec.eval_tiers;
    const Tier tier = ci.tier < 0 ? sharp_tier() : tiers[static_cast<std::size_t>(ci.tier)];
    Scene scene = make_scene(spec.width, spec.height, spec.max_objects, ci.scene_seed);
    const GrayImage degraded =
        degrade(scene.image, DegradationSpec{tier.kernel, tier.noise_sigma, ci.noise_seed});
    encode_pgm(degraded, out_dir / "images" / (ci.id + ".pgm"));
    for (const auto& o : scene.objects) {
      const BoundingBox box =
          tier.corrupt_labels
              ? detail::inflate_within(o.box, kCorruptionInflation, spec.width, spec.height)
              : o.box;
      anns[i].push_back({ci.id, box, o.category});
    }
  });

  json image_meta = json::array();
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    const CorpusImage& ci = corpus.images[i];
    corpus.manifest.images.push_back(
        {ci.id, "images/" + ci.id + ".pgm", spec.width, spec.height, ci.split});
    for (auto& a : anns[i]) corpus.manifest.annotations.push_back(std::move(a));
    image_meta.push_back({{"id", ci.id},
                          {"tier", ci.tier},
                          {"scene_seed", ci.scene_seed},
                          {"noise_seed", ci.noise_seed}});
  }
  validate_manifest(corpus.manifest);

  json train_tiers = json::array();
  for (const auto& t : spec.train_tiers) train_tiers.push_back(tier_to_json(t));
  json eval_tiers = json::array();
  for (const auto& t : spec.eval_tiers) eval_tiers.push_back(tier_to_json(t));
  // Headline degradation: the first blurred training tier, if any.
  Tier headline = sharp_tier();
  for (const auto& t : spec.train_tiers) {
    if (family_name(t.kernel) != "none" || t.noise_sigma > 0) {
      headline = t;
      break;
    }
  }
  json spec_json = {{"seed", spec.seed}, {"width", spec.width}, {"height", spec.height},
                    {"max_objects", spec.max_objects}, {"n_train", spec.n_train},
                    {"n_val", spec.n_val}, {"n_test", spec.n_test},
                    {"train_tiers", train_tiers}, {"eval_tiers", eval_tiers}};
  corpus.sidecar = {
      {"meta", make_meta(content_hash(spec_json.dump()))},
      {"generator_name", kGeneratorName},
      {"seed", spec.seed},
      {"kernel_family", family_name(headline.kernel)},
      {"params", kernel_params_json(headline.kernel)},
      {"noise_sigma", headline.noise_sigma},
      {"border_mode", "replicate"},
      {"quantization", "round-half-away-clamp-u8"},
      {"corruption_inflation", kCorruptionInflation},
      {"spec", spec_json},
      {"images", image_meta},
  };
  save_manifest(corpus.manifest, out_dir / "manifest.json");
  write_text_file(out_dir / "synth.json", dump_json(corpus.sidecar));
  return corpus;
}

}  // namespace blurbt
