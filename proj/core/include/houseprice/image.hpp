#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace houseprice::imgproc {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

/// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
public:
  RgbImage() = default;
  RgbImage(int width, int height, std::vector<Rgb> pixels);
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const Rgb> pixels() const { return pixels_; }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Single-channel 8-bit raster. Always non-empty and width*height sized.
class GrayImage {
public:
  GrayImage(int width, int height, std::vector<std::uint8_t> data);
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Luma conversion: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255].
GrayImage to_grayscale(const RgbImage& image);

/// Global histogram equalization with the cdf_min correction:
/// v' = round((cdf(v) - cdf_min) / (N - cdf_min) * 255).
/// A single occupied bin (N == cdf_min) maps to 255.
GrayImage equalize_histogram(const GrayImage& img);

/// The 256-entry lookup table used by equalize_histogram for this image.
std::vector<std::uint8_t> equalization_lut(const GrayImage& img);

}  // namespace houseprice::imgproc
