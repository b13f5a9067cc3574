#include "houseprice/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "houseprice/errors.hpp"

namespace houseprice::imgproc {

namespace {

void check_dims(int width, int height, std::size_t count) {
  if (width < 1 || height < 1) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  if (count != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionError("pixel count " + std::to_string(count) + " does not match " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

RgbImage::RgbImage(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width_, height_, pixels_.size());
}

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  check_dims(width, height, static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0));
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width_, height_, data_.size());
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height, static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0));
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage to_grayscale(const RgbImage& image) {
  if (image.empty() || image.width() < 1 || image.height() < 1) {
    throw DimensionError("cannot convert an empty image to grayscale");
  }
  std::vector<std::uint8_t> out;
  out.reserve(image.pixels().size());
  for (const Rgb& p : image.pixels()) {
    const double luma = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
    out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L)));
  }
  return GrayImage(image.width(), image.height(), std::move(out));
}

std::vector<std::uint8_t> equalization_lut(const GrayImage& img) {
  std::array<std::uint64_t, 256> hist{};
  for (std::uint8_t v : img.data()) ++hist[v];

  std::array<std::uint64_t, 256> cdf{};
  std::uint64_t running = 0;
  for (int v = 0; v < 256; ++v) {
    running += hist[v];
    cdf[v] = running;
  }
  const std::uint64_t total = running;
  std::uint64_t cdf_min = 0;
  for (int v = 0; v < 256; ++v) {
    if (cdf[v] != 0) {
      cdf_min = cdf[v];
      break;
    }
  }

  std::vector<std::uint8_t> lut(256, 0);
  if (total == cdf_min) {
    // Only one occupied bin.
    std::fill(lut.begin(), lut.end(), 255);
    return lut;
  }
  const double denom = static_cast<double>(total - cdf_min);
  for (int v = 0; v < 256; ++v) {
    if (cdf[v] < cdf_min) continue;  // unoccupied bins below the first occupied one
    const double scaled = static_cast<double>(cdf[v] - cdf_min) / denom * 255.0;
    lut[v] = static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
  }
  return lut;
}

GrayImage equalize_histogram(const GrayImage& img) {
  const auto lut = equalization_lut(img);
  std::vector<std::uint8_t> out;
  out.reserve(img.size());
  for (std::uint8_t v : img.data()) out.push_back(lut[v]);
  return GrayImage(img.width(), img.height(), std::move(out));
}

}  // namespace houseprice::imgproc
