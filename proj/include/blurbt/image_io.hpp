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

// Raster decoding (PGM P2/P5, 8-bit PNG) and 8-bit PGM encoding.

#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "blurbt/error.hpp"
#include "blurbt/image.hpp"

namespace blurbt {

/// ITU-R BT.601 luma.
inline double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

namespace detail {

class PgmReader {
 public:
  PgmReader(const std::vector<unsigned char>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  GrayImage read() {
    const bool binary = bytes_[1] == '5';
    pos_ = 2;
    const long width = next_int();
    const long height = next_int();
    const long maxval = next_int();
    if (width == 0 || height == 0) {
      throw Error(ErrorCode::kZeroDimension, path_);
    }
    if (maxval < 1 || maxval > 255) {
      throw Error(ErrorCode::kUnsupportedFormat,
                  path_ + ": PGM maxval must be in [1, 255]");
    }
    if (width > (1 << 20) || height > (1 << 20)) {
      throw Error(ErrorCode::kUnsupportedFormat, path_ + ": image too large");
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<double> data(n);
    const double scale = 255.0 / static_cast<double>(maxval);
    if (binary) {
      // Exactly one whitespace byte separates maxval from the raster.
      if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
        throw Error(ErrorCode::kUnreadable, path_ + ": malformed PGM header");
      }
      ++pos_;
      if (bytes_.size() - pos_ < n) {
        throw Error(ErrorCode::kUnreadable, path_ + ": truncated PGM raster");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double v = bytes_[pos_ + i];
        data[i] = maxval == 255 ? v : v * scale;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const long v = next_int();
        if (v > maxval) {
          throw Error(ErrorCode::kUnreadable, path_ + ": sample above maxval");
        }
        data[i] = maxval == 255 ? static_cast<double>(v) : v * scale;
      }
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height),
                     std::move(data));
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::kUnreadable, path_ + ": truncated or malformed PGM");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1L << 30)) {
        throw Error(ErrorCode::kUnreadable, path_ + ": PGM integer overflow");
      }
      ++pos_;
    }
    return v;
  }

  const std::vector<unsigned char>& bytes_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

inline GrayImage decode_png(const std::vector<unsigned char>& bytes,
                            const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kUnreadable, path + ": " + msg);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::kUnsupportedFormat,
                path + ": only 8-bit PNG is supported");
  }
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw Error(ErrorCode::kZeroDimension, path);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kUnreadable, path + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<double> data(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (color) {
      data[i] = luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]);
    } else {
      data[i] = buffer[i * channels];
    }
  }
  return GrayImage(w, h, std::move(data));
}

}  // namespace detail

/// Decodes PGM (P2/P5, maxval <= 255) or 8-bit gray/RGB PNG. Color is
/// reduced to BT.601 luma. PGM with maxval < 255 is rescaled to [0, 255].
inline GrayImage decode_image(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadable, name + ": cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 2) {
    throw Error(ErrorCode::kUnreadable, name + ": file too short");
  }
  if (bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) {
    return detail::PgmReader(bytes, name).read();
  }
  static constexpr std::array<unsigned char, 8> kPngSig = {
      0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= kPngSig.size() &&
      std::equal(kPngSig.begin(), kPngSig.end(), bytes.begin())) {
    return detail::decode_png(bytes, name);
  }
  throw Error(ErrorCode::kUnsupportedFormat, name + ": not PGM or PNG");
}

/// Quantizes to 8 bits (round half away from zero, clamp to [0, 255]).
inline std::vector<unsigned char> quantize_u8(const GrayImage& img) {
  std::vector<unsigned char> out(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    out[i] = static_cast<unsigned char>(std::clamp(std::round(px[i]), 0.0, 255.0));
  }
  return out;
}

/// Writes binary PGM (P5, maxval 255).
inline void encode_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kUnreadable, path.string() + ": cannot write");
  }
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  const auto bytes = quantize_u8(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::kUnreadable, path.string() + ": write failed");
  }
}

}  // namespace blurbt
