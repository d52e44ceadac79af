#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ragsr/degrade.hpp"
#include "ragsr/error.hpp"

using namespace ragsr;

namespace {

ImageBuffer random_image(oracle::Gen& g, int w, int h, int c) {
  ImageBuffer img(w, h, c);
  for (double& v : img.data) v = g.unit();
  return img;
}

double mean(const ImageBuffer& img) {
  double s = 0;
  for (double v : img.data) s += v;
  return s / static_cast<double>(img.data.size());
}

}  // namespace

TEST(Degrade, QuarterScaleOutput) {
  oracle::Gen g(1);
  const ImageBuffer hr = random_image(g, 256, 256, 3);
  const ImageBuffer lr = degrade(hr, DegradeConfig{});
  EXPECT_EQ(lr.width, 64);
  EXPECT_EQ(lr.height, 64);
  EXPECT_EQ(lr.channels, 3);
  for (double v : lr.data) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_EQ(std::round(v * 255.0), v * 255.0);
  }
}

TEST(Degrade, OddSizesFloor) {
  oracle::Gen g(2);
  const ImageBuffer lr = degrade(random_image(g, 67, 9, 1), DegradeConfig{4, 0.8, 0.0, false, 0});
  EXPECT_EQ(lr.width, 16);
  EXPECT_EQ(lr.height, 2);
  EXPECT_THROW(degrade(random_image(g, 3, 9, 1), DegradeConfig{}), Error);
}

TEST(Degrade, IdentityChain) {
  oracle::Gen g(3);
  const ImageBuffer hr = random_image(g, 33, 17, 3);
  EXPECT_EQ(degrade(hr, DegradeConfig{1, 0.0, 0.0, false, 0}), hr);
}

TEST(Degrade, ConstantImagePreserved) {
  const double value = 100.0 / 255.0;
  const ImageBuffer flat(40, 24, 1, value);
  for (double sigma : {0.5, 1.2, 3.0, 9.0}) {
    const ImageBuffer lr = degrade(flat, DegradeConfig{4, sigma, 0.0, false, 0});
    for (double v : lr.data) ASSERT_NEAR(v, value, 1e-12);
    const ImageBuffer q = degrade(flat, DegradeConfig{4, sigma, 0.0, true, 0});
    for (double v : q.data) ASSERT_EQ(v, value);
  }
}

TEST(Degrade, SeededDeterminism) {
  oracle::Gen g(4);
  const ImageBuffer hr = random_image(g, 64, 48, 3);
  DegradeConfig cfg;
  cfg.seed = 11;
  EXPECT_EQ(degrade(hr, cfg), degrade(hr, cfg));
  DegradeConfig other = cfg;
  other.seed = 12;
  EXPECT_NE(degrade(hr, cfg), degrade(hr, other));
}

TEST(Degrade, BlurPreservesMean) {
  oracle::Gen g(5);
  for (double sigma : {0.7, 1.2, 2.5, 6.0}) {
    const ImageBuffer img = random_image(g, 23, 31, 1);
    EXPECT_NEAR(mean(gaussian_blur(img, sigma)), mean(img), 1e-9) << sigma;
  }
}

TEST(Degrade, MonotoneHarm) {
  oracle::Gen g(6);
  const ImageBuffer hr = random_image(g, 64, 64, 1);
  for (const DegradeConfig& cfg : {DegradeConfig{4, 1.2, 0.02, true, 0}, DegradeConfig{2, 0.0, 0.05, false, 1},
                                   DegradeConfig{1, 1.0, 0.0, false, 0}}) {
    const ImageBuffer up = upsample_nearest(degrade(hr, cfg), cfg.scale);
    EXPECT_LE(psnr(hr, up), psnr(hr, hr));
    EXPECT_LT(psnr(hr, up), kPsnrCap);
  }
}

TEST(Psnr, KnownValues) {
  const ImageBuffer a(8, 8, 1, 0.5);
  EXPECT_EQ(psnr(a, a), 100.0);

  const ImageBuffer b(8, 8, 1, 0.5 + 16.0 / 255.0);
  // 20 log10(255 / 16)
  EXPECT_NEAR(psnr(a, b), 24.04840395556061, 1e-6);

  ImageBuffer check(4, 4, 1), inverse(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      check.at(x, y, 0) = (x + y) % 2;
      inverse.at(x, y, 0) = 1 - (x + y) % 2;
    }
  EXPECT_DOUBLE_EQ(psnr(check, inverse), 0.0);
  EXPECT_THROW(psnr(a, ImageBuffer(8, 8, 3)), Error);
}

TEST(Pnm, RoundTripBitExact) {
  oracle::Gen g(7);
  const auto dir = std::filesystem::temp_directory_path();
  for (int channels : {1, 3}) {
    ImageBuffer img(13, 7, channels);
    for (double& v : img.data) v = g.integer(0, 255) / 255.0;
    const auto path = dir / ("ragsr_pnm_" + std::to_string(channels) + ".pnm");
    write_pnm(img, path);
    EXPECT_EQ(read_pnm(path), img);
  }
  EXPECT_THROW(read_pnm(dir / "ragsr_no_such_image.pgm"), Error);
}
