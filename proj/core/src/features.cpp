#include "houseprice/features.hpp"

#include "houseprice/integral_image.hpp"

namespace houseprice {

std::vector<surf::InterestPoint> extract_image_features(const imgproc::GrayImage& gray, const surf::SurfParams& params,
                                                        std::size_t max_points, surf::DescribeStats* stats) {
  const imgproc::IntegralImage ii(imgproc::equalize_histogram(gray));
  auto candidates = surf::detect_interest_points(ii, params);
  auto described = surf::describe(ii, std::move(candidates), params.upright, stats);
  return surf::strongest_n(std::move(described), max_points);
}

std::vector<surf::InterestPoint> extract_image_features(const imgproc::RgbImage& image, const surf::SurfParams& params,
                                                        std::size_t max_points, surf::DescribeStats* stats) {
  return extract_image_features(imgproc::to_grayscale(image), params, max_points, stats);
}

}  // namespace houseprice
