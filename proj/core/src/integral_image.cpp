#include "houseprice/integral_image.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace houseprice::imgproc {

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()),
      data_(static_cast<std::size_t>(img.width()) * img.height()) {
  for (int y = 0; y < height_; ++y) {
    std::int64_t row_sum = 0;
    for (int x = 0; x < width_; ++x) {
      row_sum += img.at(x, y);
      const std::size_t idx = static_cast<std::size_t>(y) * width_ + x;
      data_[idx] = row_sum + (y > 0 ? data_[idx - width_] : 0);
    }
  }
}

std::int64_t IntegralImage::box_sum(int x0, int y0, int x1, int y1) const {
  if (x1 < x0 || y1 < y0) {
    throw std::invalid_argument("inverted rectangle (" + std::to_string(x0) + "," + std::to_string(y0) +
                                ")-(" + std::to_string(x1) + "," + std::to_string(y1) + ")");
  }
  if (x0 < 0 || y0 < 0 || x1 >= width_ || y1 >= height_) {
    throw std::out_of_range("rectangle outside the " + std::to_string(width_) + "x" +
                            std::to_string(height_) + " image");
  }
  return at(x1, y1) - guarded(x0 - 1, y1) - guarded(x1, y0 - 1) + guarded(x0 - 1, y0 - 1);
}

std::int64_t IntegralImage::box_sum_clamped(int x0, int y0, int x1, int y1) const {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width_ - 1);
  y1 = std::min(y1, height_ - 1);
  if (x1 < x0 || y1 < y0) return 0;
  return at(x1, y1) - guarded(x0 - 1, y1) - guarded(x1, y0 - 1) + guarded(x0 - 1, y0 - 1);
}

}  // namespace houseprice::imgproc
