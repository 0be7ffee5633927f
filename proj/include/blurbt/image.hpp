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

// Gray rasters, convolution kernels and the direct 2-D convolution used by
// both blur synthesis and blur scoring.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blurbt/error.hpp"

namespace blurbt {

/// Row-major single-channel raster with real-valued intensities.
///
/// Values are nominally in [0, 255] but are not clamped; blurred and noisy
/// images may leave that range. Every value is finite.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::kZeroDimension,
                  "image dimensions must be >= 1, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    if (!std::isfinite(fill)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite fill value");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  GrayImage(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::kZeroDimension,
                  "image dimensions must be >= 1, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pixel count does not match width*height");
    }
    for (double v : data_) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, "non-finite pixel value");
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> pixels() noexcept { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

enum class KernelClass { kLowpass, kUnconstrained };

enum class BorderMode { kPeriodic, kReplicate };

/// Square, odd-sized, center-anchored filter. LOWPASS kernels are
/// non-negative and sum to one within 1e-12; construction enforces this.
class Kernel {
 public:
  static constexpr double kLowpassSumTolerance = 1e-12;

  Kernel(int size, std::vector<double> weights, KernelClass cls)
      : size_(size), weights_(std::move(weights)), class_(cls) {
    if (size < 1 || size % 2 == 0) {
      throw Error(ErrorCode::kInvalidKernel,
                  "kernel size must be odd and >= 1, got " +
                      std::to_string(size));
    }
    if (weights_.size() != static_cast<std::size_t>(size) * size) {
      throw Error(ErrorCode::kInvalidKernel,
                  "kernel weight count does not match size*size");
    }
    double sum = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w)) {
        throw Error(ErrorCode::kInvalidKernel, "non-finite kernel weight");
      }
      if (cls == KernelClass::kLowpass && w < 0.0) {
        throw Error(ErrorCode::kInvalidKernel,
                    "lowpass kernel has a negative weight");
      }
      sum += w;
    }
    if (cls == KernelClass::kLowpass &&
        std::abs(sum - 1.0) > kLowpassSumTolerance) {
      throw Error(ErrorCode::kInvalidKernel,
                  "lowpass kernel weights must sum to 1");
    }
  }

  static Kernel identity() { return Kernel(1, {1.0}, KernelClass::kLowpass); }

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }
  KernelClass kernel_class() const noexcept { return class_; }

  // (i, j) = (column, row), both in [0, size).
  double at(int i, int j) const {
    return weights_[static_cast<std::size_t>(j) * size_ + i];
  }

  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int size_;
  std::vector<double> weights_;
  KernelClass class_;
};

namespace detail {

inline int wrap_index(int v, int n) {
  int r = v % n;
  return r < 0 ? r + n : r;
}

inline int clamp_index(int v, int n) {
  return v < 0 ? 0 : (v >= n ? n - 1 : v);
}

}  // namespace detail

/// True 2-D convolution: out(x, y) = sum_{u,v} k(u, v) * img(x - u, y - v),
/// with (u, v) the kernel offset from its center. Output has the input's
/// dimensions; values are not clamped. Accumulation runs over the kernel in
/// row-major order.
inline GrayImage convolve(const GrayImage& img, const Kernel& k,
                          BorderMode mode) {
  const int w = img.width();
  const int h = img.height();
  const int r = k.radius();
  if (mode == BorderMode::kPeriodic && k.size() > std::min(w, h)) {
    throw Error(ErrorCode::kKernelTooLarge,
                "kernel size " + std::to_string(k.size()) +
                    " exceeds image extent " + std::to_string(std::min(w, h)) +
                    " under periodic borders");
  }

  // Flattened non-zero taps; zero taps contribute an exact +0.
  struct Tap {
    int du;
    int dv;
    double weight;
  };
  std::vector<Tap> taps;
  taps.reserve(k.weights().size());
  for (int j = 0; j < k.size(); ++j) {
    for (int i = 0; i < k.size(); ++i) {
      const double wgt = k.at(i, j);
      if (wgt != 0.0) taps.push_back({i - r, j - r, wgt});
    }
  }

  GrayImage out(w, h, 0.0);
  const auto src = img.pixels();
  auto dst = out.pixels();
  const bool interior_possible = w > 2 * r && h > 2 * r;
  for (int y = 0; y < h; ++y) {
    const bool row_inside = interior_possible && y >= r && y < h - r;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      if (row_inside && x >= r && x < w - r) {
        for (const Tap& t : taps) {
          acc += t.weight *
                 src[static_cast<std::size_t>(y - t.dv) * w + (x - t.du)];
        }
      } else if (mode == BorderMode::kPeriodic) {
        for (const Tap& t : taps) {
          const int sx = detail::wrap_index(x - t.du, w);
          const int sy = detail::wrap_index(y - t.dv, h);
          acc += t.weight * src[static_cast<std::size_t>(sy) * w + sx];
        }
      } else {
        for (const Tap& t : taps) {
          const int sx = detail::clamp_index(x - t.du, w);
          const int sy = detail::clamp_index(y - t.dv, h);
          acc += t.weight * src[static_cast<std::size_t>(sy) * w + sx];
        }
      }
      dst[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

/// 4-neighbor Laplacian [[0,1,0],[1,-4,1],[0,1,0]].
inline Kernel laplacian_kernel() {
  return Kernel(3, {0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0},
                KernelClass::kUnconstrained);
}

/// Population variance (divide by N) over all pixels, accumulated in
/// row-major order with Welford's update.
inline double variance(const GrayImage& img) {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : img.pixels()) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  if (n == 0) return 0.0;
  const double var = m2 / static_cast<double>(n);
  return var < 0.0 ? 0.0 : var;
}

}  // namespace blurbt
