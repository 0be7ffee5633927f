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

// Forward degradation model (B = b * I + W) and the Laplacian-variance blur
// score with its blur-threshold decision.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "blurbt/error.hpp"
#include "blurbt/image.hpp"

namespace blurbt {

inline constexpr std::string_view kGeneratorName = "mt19937_64+box-muller";
inline constexpr double kGaussianTruncationSigmas = 3.0;

struct GaussianBlur {
  double sigma = 1.0;
  friend bool operator==(const GaussianBlur&, const GaussianBlur&) = default;
};

struct BoxBlur {
  int size = 3;
  friend bool operator==(const BoxBlur&, const BoxBlur&) = default;
};

// Linear motion; angle in degrees, counter-clockwise from the +x axis.
struct MotionBlur {
  double length = 1.0;
  double angle_deg = 0.0;
  friend bool operator==(const MotionBlur&, const MotionBlur&) = default;
};

using KernelFamily = std::variant<GaussianBlur, BoxBlur, MotionBlur>;

struct DegradationSpec {
  KernelFamily kernel = BoxBlur{1};
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const DegradationSpec&, const DegradationSpec&) = default;
};

inline std::string family_name(const KernelFamily& family) {
  struct {
    std::string operator()(const GaussianBlur&) const { return "gaussian"; }
    std::string operator()(const BoxBlur& b) const {
      return b.size == 1 ? "none" : "box";
    }
    std::string operator()(const MotionBlur&) const { return "motion"; }
  } visitor;
  return std::visit(visitor, family);
}

namespace detail {

inline Kernel normalized_lowpass(int size, std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  return Kernel(size, std::move(weights), KernelClass::kLowpass);
}

inline Kernel gaussian_kernel(const GaussianBlur& g) {
  if (!(g.sigma > 0.0) || !std::isfinite(g.sigma)) {
    throw Error(ErrorCode::kInvalidKernel, "gaussian sigma must be > 0");
  }
  const int r = static_cast<int>(std::ceil(kGaussianTruncationSigmas * g.sigma));
  const int size = 2 * r + 1;
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double denom = 2.0 * g.sigma * g.sigma;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      w[static_cast<std::size_t>(y + r) * size + (x + r)] =
          std::exp(-static_cast<double>(x * x + y * y) / denom);
    }
  }
  return normalized_lowpass(size, std::move(w));
}

inline Kernel box_kernel(const BoxBlur& b) {
  if (b.size < 1 || b.size % 2 == 0) {
    throw Error(ErrorCode::kInvalidKernel,
                "box size must be odd and >= 1, got " + std::to_string(b.size));
  }
  const std::size_t n = static_cast<std::size_t>(b.size) * b.size;
  return Kernel(b.size, std::vector<double>(n, 1.0 / static_cast<double>(n)),
                KernelClass::kLowpass);
}

// Marks every pixel touched by a densely sampled segment of the given length
// centered on the kernel center. round() is odd-symmetric, so the support is
// point-symmetric about the center.
inline Kernel motion_kernel(const MotionBlur& m) {
  if (!(m.length >= 1.0) || !std::isfinite(m.length)) {
    throw Error(ErrorCode::kInvalidKernel, "motion length must be >= 1");
  }
  if (!std::isfinite(m.angle_deg)) {
    throw Error(ErrorCode::kInvalidKernel, "motion angle must be finite");
  }
  const double half = (m.length - 1.0) / 2.0;
  const double theta = m.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  int r = 0;
  const int samples = static_cast<int>(std::ceil(4.0 * m.length)) + 1;
  std::set<std::pair<int, int>> support;
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? 0.0 : -half + (2.0 * half) * i / (samples - 1);
    const int dx = static_cast<int>(std::round(t * c));
    const int dy = static_cast<int>(-std::round(t * s));
    support.emplace(dx, dy);
    r = std::max({r, std::abs(dx), std::abs(dy)});
  }
  const int size = 2 * r + 1;
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  for (const auto& [dx, dy] : support) {
    w[static_cast<std::size_t>(dy + r) * size + (dx + r)] = 1.0;
  }
  return normalized_lowpass(size, std::move(w));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Builds the LOWPASS kernel for a degradation family. Gaussian kernels are
/// sampled on radius ceil(3 sigma) and renormalized.
inline Kernel make_kernel(const DegradationSpec& spec) {
  struct {
    Kernel operator()(const GaussianBlur& g) const {
      return detail::gaussian_kernel(g);
    }
    Kernel operator()(const BoxBlur& b) const { return detail::box_kernel(b); }
    Kernel operator()(const MotionBlur& m) const {
      return detail::motion_kernel(m);
    }
  } visitor;
  return std::visit(visitor, spec.kernel);
}

/// Per-image noise seed; independent of processing order.
inline std::uint64_t derive_seed(std::uint64_t corpus_seed,
                                 std::string_view image_id) {
  return detail::splitmix64(corpus_seed ^ detail::fnv1a64(image_id));
}

/// Standard normal stream: mt19937_64 uniforms through Box-Muller, both
/// outputs of each pair used in order.
class GaussianNoise {
 public:
  explicit GaussianNoise(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * kInv53;
    const double u2 = static_cast<double>(engine_() >> 11) * kInv53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// convolve(img, b, Replicate) + W, W ~ N(0, noise_sigma^2) i.i.d. from the
/// spec seed. Not clamped. noise_sigma == 0 adds nothing.
inline GrayImage degrade(const GrayImage& img, const DegradationSpec& spec) {
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  }
  const Kernel k = make_kernel(spec);
  GrayImage out = k.size() == 1 && k.at(0, 0) == 1.0
                      ? img
                      : convolve(img, k, BorderMode::kReplicate);
  if (spec.noise_sigma > 0.0) {
    GaussianNoise noise(spec.seed);
    for (double& v : out.pixels()) v += spec.noise_sigma * noise.next();
  }
  return out;
}

struct BlurScore {
  std::string image_id;
  double variance_of_laplacian = 0.0;
  friend bool operator==(const BlurScore&, const BlurScore&) = default;
};

class BlurThreshold {
 public:
  explicit BlurThreshold(double bt) : bt_(bt) {
    if (!(bt >= 0.0) || !std::isfinite(bt)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "blur threshold must be finite and >= 0");
    }
  }
  double value() const noexcept { return bt_; }

 private:
  double bt_;
};

/// Variance of the 4-neighbor Laplacian response.
inline double laplacian_variance(const GrayImage& img,
                                 BorderMode mode = BorderMode::kReplicate) {
  return variance(convolve(img, laplacian_kernel(), mode));
}

inline BlurScore blur_score(std::string image_id, const GrayImage& img) {
  return {std::move(image_id), laplacian_variance(img, BorderMode::kReplicate)};
}

/// Strictly below the threshold means discarded; equality keeps the image.
inline bool is_rejected(const BlurScore& score, const BlurThreshold& bt) {
  return score.variance_of_laplacian < bt.value();
}

}  // namespace blurbt
