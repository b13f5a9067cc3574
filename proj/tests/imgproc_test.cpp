#include <gtest/gtest.h>

#include <random>

#include "houseprice/errors.hpp"
#include "houseprice/image.hpp"
#include "houseprice/integral_image.hpp"
#include "oracles.hpp"

using namespace houseprice;
using imgproc::GrayImage;
using imgproc::IntegralImage;
using imgproc::RgbImage;

TEST(Grayscale, WhiteBlackRed) {
  RgbImage img(3, 1);
  img.at(0, 0) = {255, 255, 255};
  img.at(1, 0) = {0, 0, 0};
  img.at(2, 0) = {255, 0, 0};
  const auto g = imgproc::to_grayscale(img);
  EXPECT_EQ(g.at(0, 0), 255);
  EXPECT_EQ(g.at(1, 0), 0);
  EXPECT_EQ(g.at(2, 0), 76);
}

TEST(Grayscale, GrayInputIsIdentity) {
  RgbImage img(256, 1);
  for (int v = 0; v < 256; ++v) img.at(v, 0) = {std::uint8_t(v), std::uint8_t(v), std::uint8_t(v)};
  const auto g = imgproc::to_grayscale(img);
  for (int v = 0; v < 256; ++v) EXPECT_EQ(g.at(v, 0), v);
}

TEST(Grayscale, EmptyImageThrows) {
  EXPECT_THROW(imgproc::to_grayscale(RgbImage{}), DimensionError);
  EXPECT_THROW(GrayImage(0, 4), DimensionError);
}

TEST(Equalize, ConstantImageGoesTo255) {
  const GrayImage img(5, 4, 128);
  const auto eq = imgproc::equalize_histogram(img);
  for (auto v : eq.data()) EXPECT_EQ(v, 255);
}

TEST(Equalize, TwoPixelImage) {
  const GrayImage img(2, 1, std::vector<std::uint8_t>{0, 255});
  const auto eq = imgproc::equalize_histogram(img);
  EXPECT_EQ(eq.at(0, 0), 0);
  EXPECT_EQ(eq.at(1, 0), 255);
}

TEST(Equalize, UniformHistogramIsFixedPoint) {
  std::vector<std::uint8_t> data(256 * 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i % 256);
  const GrayImage img(64, 16, data);
  const auto eq = imgproc::equalize_histogram(img);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_LE(std::abs(int(eq.data()[i]) - int(data[i])), 1) << i;
}

TEST(Equalize, MonotoneAndMaxBinTo255) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto img = oracle::random_gray(40, 30, seed);
    // Skew the histogram so the mapping is far from identity.
    std::vector<std::uint8_t> skewed(img.data().begin(), img.data().end());
    for (auto& v : skewed) v = static_cast<std::uint8_t>(v / 3 + 20);
    const GrayImage g(40, 30, skewed);
    const auto lut = imgproc::equalization_lut(g);
    for (int v = 1; v < 256; ++v) EXPECT_LE(lut[v - 1], lut[v]);
    const auto top = *std::max_element(skewed.begin(), skewed.end());
    EXPECT_EQ(lut[top], 255);
    const auto eq = imgproc::equalize_histogram(g);
    for (std::size_t i = 0; i < skewed.size(); ++i) EXPECT_EQ(eq.data()[i], lut[skewed[i]]);
  }
}

TEST(IntegralImage, AllOnesClosedForm) {
  const GrayImage img(7, 5, 1);
  const IntegralImage ii(img);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(ii.at(x, y), (x + 1) * (y + 1));
  EXPECT_EQ(IntegralImage(GrayImage(8, 8, 1)).box_sum(0, 0, 7, 7), 64);
}

TEST(IntegralImage, SinglePixel) {
  const IntegralImage ii(GrayImage(1, 1, 200));
  EXPECT_EQ(ii.at(0, 0), 200);
}

TEST(IntegralImage, MatchesBruteForcePrefixes) {
  const auto img = oracle::random_gray(16, 16, 7);
  const IntegralImage ii(img);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(ii.at(x, y), oracle::brute_box_sum(img, 0, 0, x, y));
}

TEST(IntegralImage, NoOverflowAtMaximumSize) {
  const GrayImage img(4096, 4096, 255);
  const IntegralImage ii(img);
  EXPECT_EQ(ii.at(4095, 4095), std::int64_t{4096} * 4096 * 255);
}

TEST(BoxSum, RandomRectanglesExact) {
  const auto img = oracle::random_gray(32, 32, 11);
  const IntegralImage ii(img);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coord(0, 31);
  for (int k = 0; k < 100; ++k) {
    int x0 = coord(rng), x1 = coord(rng), y0 = coord(rng), y1 = coord(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    EXPECT_EQ(ii.box_sum(x0, y0, x1, y1), oracle::brute_box_sum(img, x0, y0, x1, y1));
  }
}

TEST(BoxSum, SinglePixelRectangle) {
  const auto img = oracle::random_gray(9, 6, 3);
  const IntegralImage ii(img);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 9; ++x) EXPECT_EQ(ii.box_sum(x, y, x, y), img.at(x, y));
}

TEST(BoxSum, InvertedRectangleThrows) {
  const IntegralImage ii(GrayImage(8, 8, 1));
  EXPECT_THROW(ii.box_sum(5, 0, 4, 7), std::invalid_argument);
  EXPECT_THROW(ii.box_sum(0, 5, 7, 4), std::invalid_argument);
}

TEST(BoxSum, ClampedVariant) {
  const IntegralImage ii(GrayImage(8, 8, 1));
  EXPECT_EQ(ii.box_sum_clamped(-3, -3, 20, 20), 64);
  EXPECT_EQ(ii.box_sum_clamped(-5, 0, -1, 7), 0);
  EXPECT_EQ(ii.box_sum_clamped(6, 6, 10, 10), 4);
}
