#pragma once

#include <vector>

#include "houseprice/image.hpp"
#include "houseprice/surf.hpp"

namespace houseprice {

/// One photo through the visual pipeline: grayscale, histogram equalization,
/// integral image, detection, description, then the `max_points` strongest.
std::vector<surf::InterestPoint> extract_image_features(const imgproc::RgbImage& image, const surf::SurfParams& params,
                                                        std::size_t max_points, surf::DescribeStats* stats = nullptr);

std::vector<surf::InterestPoint> extract_image_features(const imgproc::GrayImage& gray, const surf::SurfParams& params,
                                                        std::size_t max_points, surf::DescribeStats* stats = nullptr);

}  // namespace houseprice
