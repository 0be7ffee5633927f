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

#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <fstream>
#include <random>

#include "blurbt/image.hpp"
#include "blurbt/image_io.hpp"
#include "test_support.hpp"

namespace blurbt {
namespace {

using testing::ScratchDir;

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

void write_png(const std::filesystem::path& p, int w, int h, bool color,
               const std::vector<unsigned char>& px) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  ASSERT_TRUE(png_image_write_to_file(&image, p.c_str(), 0, px.data(), 0, nullptr));
}

TEST(GrayImage, RejectsZeroDimension) {
  try {
    GrayImage(0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroDimension);
  }
}

TEST(GrayImage, RejectsNonFiniteAndSizeMismatch) {
  EXPECT_THROW(GrayImage(2, 1, std::vector<double>{1.0, NAN}), Error);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{1.0, 2.0}), Error);
}

TEST(Kernel, EnforcesOddSizeAndLowpassClass) {
  EXPECT_THROW(Kernel(2, {0.25, 0.25, 0.25, 0.25}, KernelClass::kLowpass), Error);
  EXPECT_THROW(Kernel(1, {0.5}, KernelClass::kLowpass), Error);
  EXPECT_THROW(Kernel(3, {0, 0, 0, 0, 2, 0, 0, 0, -1}, KernelClass::kLowpass), Error);
  EXPECT_NO_THROW(Kernel(1, {0.5}, KernelClass::kUnconstrained));
}

TEST(DecodeImage, SinglePixelPgm) {
  ScratchDir dir("decode");
  write_bytes(dir / "a.pgm", std::string("P5\n1 1\n255\n") + char(7));
  const GrayImage img = decode_image(dir / "a.pgm");
  EXPECT_EQ(img, GrayImage(1, 1, std::vector<double>{7.0}));
}

TEST(DecodeImage, AsciiPgmWithComments) {
  ScratchDir dir("decode");
  write_bytes(dir / "a.pgm", "P2\n# comment\n3 1\n# another\n255\n0 128\n255\n");
  const GrayImage img = decode_image(dir / "a.pgm");
  EXPECT_EQ(img, GrayImage(3, 1, std::vector<double>{0, 128, 255}));
}

TEST(DecodeImage, TruncatedPgmIsUnreadable) {
  ScratchDir dir("decode");
  write_bytes(dir / "t.pgm", "P5\n4 4\n255\nabc");
  try {
    decode_image(dir / "t.pgm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnreadable);
  }
}

TEST(DecodeImage, ErrorKinds) {
  ScratchDir dir("decode");
  write_bytes(dir / "x.bmp", "BM....");
  write_bytes(dir / "wide.pgm", "P5\n2 1\n65535\nxxxx");
  write_bytes(dir / "zero.pgm", "P5\n0 4\n255\n");
  auto code_of = [](const std::filesystem::path& p) {
    try {
      decode_image(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of(dir / "x.bmp"), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(code_of(dir / "wide.pgm"), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(code_of(dir / "zero.pgm"), ErrorCode::kZeroDimension);
  EXPECT_EQ(code_of(dir / "missing.pgm"), ErrorCode::kUnreadable);
}

TEST(DecodeImage, RgbPngUsesBt601Luma) {
  ScratchDir dir("decode");
  write_png(dir / "c.png", 2, 1, true, {255, 0, 0, 10, 20, 30});
  const GrayImage img = decode_image(dir / "c.png");
  ASSERT_EQ(img.width(), 2);
  // 0.299 * 255, by hand.
  EXPECT_NEAR(img.at(0, 0), 76.245, 1e-12);
  EXPECT_NEAR(img.at(1, 0), 0.299 * 10 + 0.587 * 20 + 0.114 * 30, 1e-12);
}

TEST(DecodeImage, GrayPngAndPgmAgree) {
  ScratchDir dir("decode");
  std::vector<unsigned char> px = {0, 17, 99, 200, 255, 3};
  write_png(dir / "g.png", 3, 2, false, px);
  encode_pgm(GrayImage(3, 2, std::vector<double>(px.begin(), px.end())), dir / "g.pgm");
  EXPECT_EQ(decode_image(dir / "g.png"), decode_image(dir / "g.pgm"));
}

TEST(EncodePgm, ClampsAndRounds) {
  ScratchDir dir("encode");
  encode_pgm(GrayImage(4, 1, std::vector<double>{-3.0, 12.5, 254.4, 300.0}), dir / "e.pgm");
  EXPECT_EQ(decode_image(dir / "e.pgm"), GrayImage(4, 1, std::vector<double>{0, 13, 254, 255}));
}

TEST(Convolve, IdentityKernelLeavesImageUnchanged) {
  std::mt19937_64 rng(1);
  const GrayImage img = testing::random_image(rng, 7, 5);
  EXPECT_EQ(convolve(img, Kernel::identity(), BorderMode::kPeriodic), img);
  EXPECT_EQ(convolve(img, Kernel::identity(), BorderMode::kReplicate), img);
}

TEST(Convolve, LowpassPreservesConstant) {
  std::mt19937_64 rng(2);
  const GrayImage img(9, 9, 42.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Kernel k = testing::random_lowpass(rng, 7);
    for (auto mode : {BorderMode::kPeriodic, BorderMode::kReplicate}) {
      const GrayImage out = convolve(img, k, mode);
      for (double v : out.pixels()) EXPECT_NEAR(v, 42.0, 1e-12);
    }
  }
}

TEST(Convolve, PeriodicBoxOnThreeByThree) {
  const GrayImage img(3, 3, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Kernel box(3, std::vector<double>(9, 1.0 / 9.0), KernelClass::kLowpass);
  // Each wrap-around 3x3 window covers all nine values: 45 / 9.
  const GrayImage out = convolve(img, box, BorderMode::kPeriodic);
  for (double v : out.pixels()) EXPECT_NEAR(v, 5.0, 1e-12);
}

TEST(Convolve, FlipsKernel) {
  // Impulse response equals the kernel itself only for true convolution.
  GrayImage impulse(5, 5, 0.0);
  impulse.at(2, 2) = 1.0;
  const Kernel k(3, {1, 2, 3, 4, 5, 6, 7, 8, 9}, KernelClass::kUnconstrained);
  const GrayImage out = convolve(impulse, k, BorderMode::kPeriodic);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) EXPECT_EQ(out.at(1 + i, 1 + j), k.at(i, j));
  }
}

TEST(Convolve, KernelTooLargeForPeriodic) {
  const GrayImage img(4, 8, 1.0);
  const Kernel k(5, std::vector<double>(25, 1.0 / 25.0), KernelClass::kLowpass);
  try {
    convolve(img, k, BorderMode::kPeriodic);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKernelTooLarge);
  }
  EXPECT_NO_THROW(convolve(img, k, BorderMode::kReplicate));
}

TEST(Convolve, MatchesBruteForceOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = testing::uniform_int(rng, 7, 20);
    const int h = testing::uniform_int(rng, 7, 20);
    const GrayImage img = testing::random_image(rng, w, h);
    const Kernel k = testing::random_lowpass(rng, 7);
    for (auto mode : {BorderMode::kPeriodic, BorderMode::kReplicate}) {
      const auto expect = testing::oracle_convolve(img, k, mode);
      const GrayImage got = convolve(img, k, mode);
      for (std::size_t i = 0; i < expect.size(); ++i) {
        ASSERT_NEAR(got.pixels()[i], expect[i], 1e-9);
      }
    }
  }
}

TEST(Laplacian, Definition) {
  const Kernel lap = laplacian_kernel();
  EXPECT_EQ(lap.size(), 3);
  EXPECT_EQ(lap.kernel_class(), KernelClass::kUnconstrained);
  EXPECT_EQ(lap.at(1, 1), -4.0);
  double sum = 0.0;
  for (double w : lap.weights()) sum += w;
  EXPECT_EQ(sum, 0.0);
  for (auto mode : {BorderMode::kPeriodic, BorderMode::kReplicate}) {
    const GrayImage out = convolve(GrayImage(6, 4, 93.7), lap, mode);
    for (double v : out.pixels()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Variance, Examples) {
  EXPECT_EQ(variance(GrayImage(5, 3, 17.25)), 0.0);
  EXPECT_DOUBLE_EQ(variance(GrayImage(2, 1, std::vector<double>{0.0, 2.0})), 1.0);
}

TEST(Variance, MatchesTwoPassOracle) {
  std::mt19937_64 rng(4);
  const GrayImage img = testing::random_image(rng, 64, 64);
  const std::vector<double> px(img.pixels().begin(), img.pixels().end());
  EXPECT_NEAR(variance(img), testing::oracle_variance(px), 1e-9);
}

// ---------------------------------------------------------------------------
// Properties.

TEST(ConvolveProperty, Linearity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = testing::uniform_int(rng, 5, 16);
    const int h = testing::uniform_int(rng, 5, 16);
    const GrayImage x = testing::random_image(rng, w, h);
    const GrayImage y = testing::random_image(rng, w, h);
    const double a = testing::uniform(rng, -3, 3);
    const double b = testing::uniform(rng, -3, 3);
    GrayImage combo(w, h, 0.0);
    for (std::size_t i = 0; i < combo.size(); ++i) {
      combo.pixels()[i] = a * x.pixels()[i] + b * y.pixels()[i];
    }
    const Kernel k = trial % 2 ? laplacian_kernel() : testing::random_lowpass(rng, 5);
    for (auto mode : {BorderMode::kPeriodic, BorderMode::kReplicate}) {
      const GrayImage lhs = convolve(combo, k, mode);
      const GrayImage cx = convolve(x, k, mode);
      const GrayImage cy = convolve(y, k, mode);
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        ASSERT_NEAR(lhs.pixels()[i], a * cx.pixels()[i] + b * cy.pixels()[i], 1e-9);
      }
    }
  }
}

TEST(ConvolveProperty, LaplacianIgnoresDcOffset) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage x = testing::random_image(rng, 12, 9);
    const double c = testing::uniform(rng, -100, 100);
    GrayImage shifted = x;
    for (double& v : shifted.pixels()) v += c;
    const GrayImage a = convolve(x, laplacian_kernel(), BorderMode::kPeriodic);
    const GrayImage b = convolve(shifted, laplacian_kernel(), BorderMode::kPeriodic);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.pixels()[i], b.pixels()[i], 1e-9);
  }
}

TEST(ConvolveProperty, LowpassContractsLaplacianEnergy) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = testing::uniform_int(rng, 9, 24);
    const int h = testing::uniform_int(rng, 9, 24);
    const GrayImage x = testing::random_image(rng, w, h);
    const Kernel b = testing::random_lowpass(rng, 9);
    const double before = laplacian_variance(x, BorderMode::kPeriodic);
    const double after = laplacian_variance(convolve(x, b, BorderMode::kPeriodic),
                                            BorderMode::kPeriodic);
    ASSERT_LE(after, before * (1 + 1e-12)) << "trial " << trial;
  }
}

TEST(VarianceProperty, Scaling) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage x = testing::random_image(rng, 10, 10);
    const double s = testing::uniform(rng, -5, 5);
    GrayImage sx = x;
    for (double& v : sx.pixels()) v *= s;
    const double expect = s * s * variance(x);
    ASSERT_NEAR(variance(sx), expect, 1e-9 * std::max(1.0, expect));
  }
}

TEST(ConvolveProperty, PeriodicShiftEquivariance) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 11, h = 8;
    const GrayImage x = testing::random_image(rng, w, h);
    const int dx = testing::uniform_int(rng, 0, w - 1);
    const int dy = testing::uniform_int(rng, 0, h - 1);
    auto shift = [&](const GrayImage& img) {
      GrayImage out(w, h, 0.0);
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) out.at((xx + dx) % w, (y + dy) % h) = img.at(xx, y);
      }
      return out;
    };
    const Kernel k = testing::random_lowpass(rng, 5);
    const GrayImage a = shift(convolve(x, k, BorderMode::kPeriodic));
    const GrayImage b = convolve(shift(x), k, BorderMode::kPeriodic);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.pixels()[i], b.pixels()[i], 1e-9);
  }
}

}  // namespace
}  // namespace blurbt
