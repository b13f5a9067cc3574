#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "houseprice/integral_image.hpp"

namespace houseprice::surf {

inline constexpr std::size_t kDescriptorSize = 64;
using Descriptor = std::array<double, kDescriptorSize>;

/// A detected keypoint. `scale` is in pixels (1.2 * filter_size / 9);
/// orientation is in [0, 2pi) and stays 0 for upright extraction.
struct InterestPoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.2;
  double response = 0.0;
  int laplacian_sign = 1;
  double orientation = 0.0;
  Descriptor descriptor{};
};

struct SurfParams {
  double hessian_threshold = 600.0;  // on area-normalized responses of 0..255 intensities
  int octaves = 4;                   // 1..4
  bool upright = false;
  int initial_step = 1;              // sampling step of the first octave; doubles per octave
};

void validate(const SurfParams& params);

/// Filter side lengths of one octave (0-based index).
std::array<int, 4> octave_filter_sizes(int octave);

/// Determinant-of-Hessian responses of one box-filter size sampled every
/// `sampling_step` pixels. Sample (c, r) sits on pixel (c * step, r * step).
/// Entries whose filter does not fit inside the image are 0.
struct ResponseMap {
  int width = 0;
  int height = 0;
  int filter_size = 9;
  int sampling_step = 1;
  bool fits = false;  // false when the filter fits nowhere in the image
  std::vector<double> values;
  std::vector<std::int8_t> laplacian;  // sign of Dxx + Dyy

  double at(int c, int r) const { return values[static_cast<std::size_t>(r) * width + c]; }
  int laplacian_at(int c, int r) const { return laplacian[static_cast<std::size_t>(r) * width + c]; }
  /// Whether the filter is fully inside the image at sample (c, r).
  bool inside(int c, int r, int image_width, int image_height) const;
};

ResponseMap hessian_response_map(const imgproc::IntegralImage& ii, int filter_size, int sampling_step);

/// Scale-space extrema of the Hessian response, refined to sub-pixel/sub-scale
/// precision. Orientation and descriptor are left unfilled.
std::vector<InterestPoint> detect_interest_points(const imgproc::IntegralImage& ii, const SurfParams& params);

/// Dominant orientation from Gaussian-weighted Haar responses on a disc of
/// radius 6s. std::nullopt when the sampling disc leaves the image; the caller
/// drops such points.
std::optional<double> assign_orientation(const imgproc::IntegralImage& ii, const InterestPoint& p);

struct DescriptorResult {
  Descriptor values{};
  bool degenerate = false;  // all-zero responses; values stay zero
};

/// SURF-64 descriptor over a 20s window, oriented by p.orientation unless
/// `upright`. std::nullopt when the window leaves the image.
std::optional<DescriptorResult> compute_descriptor(const imgproc::IntegralImage& ii, const InterestPoint& p,
                                                   bool upright);

struct DescribeStats {
  std::size_t candidates = 0;
  std::size_t dropped_orientation = 0;
  std::size_t dropped_window = 0;
  std::size_t degenerate = 0;
};

/// Orientation + descriptor for every candidate; points whose sampling
/// footprint leaves the image or whose descriptor is degenerate are dropped
/// and counted in `stats`.
std::vector<InterestPoint> describe(const imgproc::IntegralImage& ii, std::vector<InterestPoint> candidates,
                                    bool upright, DescribeStats* stats = nullptr);

/// Strict weak order used for selection: response desc, scale desc, y asc, x asc.
bool stronger(const InterestPoint& a, const InterestPoint& b);

/// First min(n, size) points under `stronger`.
std::vector<InterestPoint> strongest_n(std::vector<InterestPoint> points, std::size_t n);

/// Largest threshold for which at least half of the images keep `target`
/// points, given each image's points detected at threshold 0.
double calibrate_threshold(std::span<const std::vector<InterestPoint>> per_image_points, std::size_t target);

}  // namespace houseprice::surf
