#pragma once

#include <cstdint>
#include <vector>

#include "houseprice/image.hpp"

namespace houseprice::imgproc {

/// Summed-area table over a GrayImage with inclusive prefixes:
/// at(x, y) == sum of img over [0..x] x [0..y]. Stored exactly width*height;
/// the implicit zero row/column is handled by the accessors.
class IntegralImage {
public:
  explicit IntegralImage(const GrayImage& img);

  int width() const { return width_; }
  int height() const { return height_; }

  std::int64_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Inclusive rectangle sum. Requires 0 <= x0 <= x1 < width, 0 <= y0 <= y1 < height.
  /// Throws std::invalid_argument on an inverted rectangle, std::out_of_range outside the image.
  std::int64_t box_sum(int x0, int y0, int x1, int y1) const;

  /// Same as box_sum but clamps the rectangle to the image first; an empty
  /// intersection sums to 0.
  std::int64_t box_sum_clamped(int x0, int y0, int x1, int y1) const;

  /// Sum over `rows` x `cols` pixels starting at (col, row). Clamped; the
  /// box-filter code in surf addresses rectangles this way.
  std::int64_t box(int row, int col, int rows, int cols) const {
    return box_sum_clamped(col, row, col + cols - 1, row + rows - 1);
  }

private:
  std::int64_t guarded(int x, int y) const { return (x < 0 || y < 0) ? 0 : at(x, y); }

  int width_;
  int height_;
  std::vector<std::int64_t> data_;
};

inline IntegralImage integral_image(const GrayImage& img) { return IntegralImage(img); }

}  // namespace houseprice::imgproc
