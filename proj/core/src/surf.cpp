#include "houseprice/surf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "houseprice/errors.hpp"

namespace houseprice::surf {

using imgproc::IntegralImage;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDxyWeight = 0.9;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  // fmod can return exactly 2pi after the correction for tiny negatives
  return a >= kTwoPi ? 0.0 : a;
}

// Haar wavelet responses centred on pixel (row, col): two h-wide halves of a
// (2h+1)-square footprint, the centre row/column excluded so that the filter is
// antisymmetric about the pixel. Positive x means intensity grows to the right,
// positive y means it grows downwards.
double haar_x(const IntegralImage& ii, int row, int col, int size) {
  const int h = size / 2;
  return static_cast<double>(ii.box(row - h, col + 1, 2 * h + 1, h) - ii.box(row - h, col - h, 2 * h + 1, h));
}

double haar_y(const IntegralImage& ii, int row, int col, int size) {
  const int h = size / 2;
  return static_cast<double>(ii.box(row + 1, col - h, h, 2 * h + 1) - ii.box(row - h, col - h, h, 2 * h + 1));
}

bool haar_fits(const IntegralImage& ii, int row, int col, int size) {
  const int h = size / 2;
  return row - h >= 0 && col - h >= 0 && row + h < ii.height() && col + h < ii.width();
}

int rounded_scale(double scale) { return std::max(1, static_cast<int>(std::lround(scale))); }

}  // namespace

void validate(const SurfParams& params) {
  if (!(params.hessian_threshold >= 0.0) || !std::isfinite(params.hessian_threshold)) {
    throw ConfigError("hessian_threshold must be a finite value >= 0");
  }
  if (params.octaves < 1 || params.octaves > 4) {
    throw ConfigError("octaves must be in [1, 4], got " + std::to_string(params.octaves));
  }
  if (params.initial_step < 1) {
    throw ConfigError("initial_step must be >= 1");
  }
}

std::array<int, 4> octave_filter_sizes(int octave) {
  static constexpr std::array<std::array<int, 4>, 4> kSchedule{{
      {9, 15, 21, 27},
      {15, 27, 39, 51},
      {27, 51, 75, 99},
      {51, 99, 147, 195},
  }};
  if (octave < 0 || octave >= static_cast<int>(kSchedule.size())) {
    throw ConfigError("octave index out of range: " + std::to_string(octave));
  }
  return kSchedule[static_cast<std::size_t>(octave)];
}

bool ResponseMap::inside(int c, int r, int image_width, int image_height) const {
  const int b = (filter_size - 1) / 2;
  const int x = c * sampling_step;
  const int y = r * sampling_step;
  return c >= 0 && r >= 0 && c < width && r < height && x - b >= 0 && y - b >= 0 && x + b < image_width &&
         y + b < image_height;
}

ResponseMap hessian_response_map(const IntegralImage& ii, int filter_size, int sampling_step) {
  if (filter_size < 9 || filter_size % 2 == 0) {
    throw ConfigError("filter size must be odd and >= 9, got " + std::to_string(filter_size));
  }
  if (sampling_step < 1) throw ConfigError("sampling step must be >= 1");

  ResponseMap map;
  map.filter_size = filter_size;
  map.sampling_step = sampling_step;
  map.width = std::max(1, ii.width() / sampling_step);
  map.height = std::max(1, ii.height() / sampling_step);
  map.values.assign(static_cast<std::size_t>(map.width) * map.height, 0.0);
  map.laplacian.assign(map.values.size(), 1);

  const int w = filter_size;
  const int b = (w - 1) / 2;
  const int l = w / 3;  // lobe length
  const double inv_area = 1.0 / (static_cast<double>(w) * w);

  for (int r = 0; r < map.height; ++r) {
    const int y = r * sampling_step;
    if (y - b < 0 || y + b >= ii.height()) continue;
    for (int c = 0; c < map.width; ++c) {
      const int x = c * sampling_step;
      if (x - b < 0 || x + b >= ii.width()) continue;
      map.fits = true;

      const std::int64_t dxx =
          ii.box(y - l + 1, x - b, 2 * l - 1, w) - 3 * ii.box(y - l + 1, x - l / 2, 2 * l - 1, l);
      const std::int64_t dyy =
          ii.box(y - b, x - l + 1, w, 2 * l - 1) - 3 * ii.box(y - l / 2, x - l + 1, l, 2 * l - 1);
      const std::int64_t dxy = ii.box(y - l, x + 1, l, l) + ii.box(y + 1, x - l, l, l) -
                               ii.box(y - l, x - l, l, l) - ii.box(y + 1, x + 1, l, l);

      const double nxx = static_cast<double>(dxx) * inv_area;
      const double nyy = static_cast<double>(dyy) * inv_area;
      const double nxy = static_cast<double>(dxy) * inv_area;
      const std::size_t idx = static_cast<std::size_t>(r) * map.width + c;
      map.values[idx] = nxx * nyy - (kDxyWeight * nxy) * (kDxyWeight * nxy);
      map.laplacian[idx] = (dxx + dyy) >= 0 ? 1 : -1;
    }
  }
  return map;
}

namespace {

// Tries to refine the extremum at (c, r) of `mid` by one Newton step on the
// 3x3x3 neighbourhood; returns false when the step leaves the sample cell.
bool refine(const ResponseMap& bot, const ResponseMap& mid, const ResponseMap& top, int c, int r,
            double offset[3], double* refined) {
  const double v = mid.at(c, r);
  const double g[3] = {
      (mid.at(c + 1, r) - mid.at(c - 1, r)) / 2.0,
      (mid.at(c, r + 1) - mid.at(c, r - 1)) / 2.0,
      (top.at(c, r) - bot.at(c, r)) / 2.0,
  };
  const double dxx = mid.at(c + 1, r) + mid.at(c - 1, r) - 2.0 * v;
  const double dyy = mid.at(c, r + 1) + mid.at(c, r - 1) - 2.0 * v;
  const double dss = top.at(c, r) + bot.at(c, r) - 2.0 * v;
  const double dxy = (mid.at(c + 1, r + 1) - mid.at(c - 1, r + 1) - mid.at(c + 1, r - 1) + mid.at(c - 1, r - 1)) / 4.0;
  const double dxs = (top.at(c + 1, r) - top.at(c - 1, r) - bot.at(c + 1, r) + bot.at(c - 1, r)) / 4.0;
  const double dys = (top.at(c, r + 1) - top.at(c, r - 1) - bot.at(c, r + 1) + bot.at(c, r - 1)) / 4.0;

  const double h[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
  const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                     h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                     h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
  if (det == 0.0 || !std::isfinite(det)) return false;

  double inv[3][3];
  inv[0][0] = (h[1][1] * h[2][2] - h[1][2] * h[2][1]) / det;
  inv[0][1] = (h[0][2] * h[2][1] - h[0][1] * h[2][2]) / det;
  inv[0][2] = (h[0][1] * h[1][2] - h[0][2] * h[1][1]) / det;
  inv[1][0] = (h[1][2] * h[2][0] - h[1][0] * h[2][2]) / det;
  inv[1][1] = (h[0][0] * h[2][2] - h[0][2] * h[2][0]) / det;
  inv[1][2] = (h[0][2] * h[1][0] - h[0][0] * h[1][2]) / det;
  inv[2][0] = (h[1][0] * h[2][1] - h[1][1] * h[2][0]) / det;
  inv[2][1] = (h[0][1] * h[2][0] - h[0][0] * h[2][1]) / det;
  inv[2][2] = (h[0][0] * h[1][1] - h[0][1] * h[1][0]) / det;

  for (int i = 0; i < 3; ++i) {
    offset[i] = -(inv[i][0] * g[0] + inv[i][1] * g[1] + inv[i][2] * g[2]);
    if (!(std::abs(offset[i]) <= 0.5)) return false;
  }
  *refined = v + 0.5 * (g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2]);
  return true;
}

bool is_local_max(const ResponseMap& bot, const ResponseMap& mid, const ResponseMap& top, int c, int r) {
  const double v = std::abs(mid.at(c, r));
  for (const ResponseMap* m : {&bot, &mid, &top}) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (m == &mid && dr == 0 && dc == 0) continue;
        if (std::abs(m->at(c + dc, r + dr)) >= v) return false;
      }
    }
  }
  return true;
}

}  // namespace

std::vector<InterestPoint> detect_interest_points(const IntegralImage& ii, const SurfParams& params) {
  validate(params);
  std::vector<InterestPoint> points;

  for (int octave = 0; octave < params.octaves; ++octave) {
    const int step = params.initial_step << octave;
    const auto sizes = octave_filter_sizes(octave);
    if (sizes[3] > std::min(ii.width(), ii.height())) break;  // largest filter must fit somewhere

    std::array<ResponseMap, 4> maps;
    for (std::size_t i = 0; i < sizes.size(); ++i) maps[i] = hessian_response_map(ii, sizes[i], step);

    const int filter_step = sizes[1] - sizes[0];
    for (int layer = 1; layer <= 2; ++layer) {
      const ResponseMap& bot = maps[layer - 1];
      const ResponseMap& mid = maps[layer];
      const ResponseMap& top = maps[layer + 1];
      for (int r = 1; r + 1 < mid.height; ++r) {
        for (int c = 1; c + 1 < mid.width; ++c) {
          // The largest filter of the triple bounds the valid neighbourhood.
          if (!top.inside(c - 1, r - 1, ii.width(), ii.height()) ||
              !top.inside(c + 1, r + 1, ii.width(), ii.height())) {
            continue;
          }
          const double v = mid.at(c, r);
          if (v < params.hessian_threshold) continue;
          if (!is_local_max(bot, mid, top, c, r)) continue;

          double offset[3];
          double refined = v;
          if (!refine(bot, mid, top, c, r, offset, &refined)) continue;
          if (refined < params.hessian_threshold) continue;

          InterestPoint p;
          p.x = c * step + offset[0] * step;
          p.y = r * step + offset[1] * step;
          p.scale = 1.2 / 9.0 * (sizes[layer] + offset[2] * filter_step);
          p.response = refined;
          p.laplacian_sign = mid.laplacian_at(c, r);
          points.push_back(p);
        }
      }
    }
  }
  return points;
}

std::optional<double> assign_orientation(const IntegralImage& ii, const InterestPoint& p) {
  const int s = rounded_scale(p.scale);
  const int row = static_cast<int>(std::lround(p.y));
  const int col = static_cast<int>(std::lround(p.x));
  const int haar_size = 4 * s;
  constexpr double kSigma = 2.5;

  struct Sample {
    double dx, dy, angle;
  };
  std::vector<Sample> samples;
  samples.reserve(113);
  for (int i = -6; i <= 6; ++i) {
    for (int j = -6; j <= 6; ++j) {
      if (i * i + j * j >= 36) continue;
      const int sr = row + j * s;
      const int sc = col + i * s;
      if (!haar_fits(ii, sr, sc, haar_size)) return std::nullopt;
      const double weight = std::exp(-(i * i + j * j) / (2.0 * kSigma * kSigma));
      const double dx = weight * haar_x(ii, sr, sc, haar_size);
      const double dy = weight * haar_y(ii, sr, sc, haar_size);
      samples.push_back({dx, dy, wrap_angle(std::atan2(dy, dx))});
    }
  }

  constexpr double kWindow = std::numbers::pi / 3.0;
  constexpr double kStep = 0.15;
  double best_norm = 0.0;
  double best = 0.0;
  for (double start = 0.0; start < kTwoPi; start += kStep) {
    const double end = start + kWindow;
    double sum_x = 0.0;
    double sum_y = 0.0;
    for (const Sample& sm : samples) {
      const bool in_window = end < kTwoPi ? (sm.angle >= start && sm.angle < end)
                                          : (sm.angle >= start || sm.angle < end - kTwoPi);
      if (in_window) {
        sum_x += sm.dx;
        sum_y += sm.dy;
      }
    }
    const double norm = sum_x * sum_x + sum_y * sum_y;
    if (norm > best_norm) {
      best_norm = norm;
      best = wrap_angle(std::atan2(sum_y, sum_x));
    }
  }
  return best;
}

std::optional<DescriptorResult> compute_descriptor(const IntegralImage& ii, const InterestPoint& p, bool upright) {
  const double s = p.scale;
  const int haar_size = 2 * rounded_scale(s);
  const double theta = upright ? 0.0 : p.orientation;
  const double co = std::cos(theta);
  const double si = std::sin(theta);
  const double sigma = 3.3 * s;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  DescriptorResult result;
  for (int sv = 0; sv < 4; ++sv) {
    for (int su = 0; su < 4; ++su) {
      double sum_dx = 0.0, sum_dy = 0.0, sum_adx = 0.0, sum_ady = 0.0;
      for (int l = 0; l < 5; ++l) {
        for (int k = 0; k < 5; ++k) {
          const double u = (-10.0 + 5.0 * su + k + 0.5) * s;
          const double v = (-10.0 + 5.0 * sv + l + 0.5) * s;
          const int sc = static_cast<int>(std::lround(p.x + u * co - v * si));
          const int sr = static_cast<int>(std::lround(p.y + u * si + v * co));
          if (!haar_fits(ii, sr, sc, haar_size)) return std::nullopt;
          const double gx = haar_x(ii, sr, sc, haar_size);
          const double gy = haar_y(ii, sr, sc, haar_size);
          const double weight = std::exp(-(u * u + v * v) * inv_two_sigma2);
          const double rx = weight * (gx * co + gy * si);
          const double ry = weight * (-gx * si + gy * co);
          sum_dx += rx;
          sum_dy += ry;
          sum_adx += std::abs(rx);
          sum_ady += std::abs(ry);
        }
      }
      const std::size_t base = static_cast<std::size_t>(sv * 4 + su) * 4;
      result.values[base + 0] = sum_dx;
      result.values[base + 1] = sum_dy;
      result.values[base + 2] = sum_adx;
      result.values[base + 3] = sum_ady;
    }
  }

  double norm2 = 0.0;
  for (double d : result.values) norm2 += d * d;
  const double norm = std::sqrt(norm2);
  if (norm <= 1e-12) {
    result.values.fill(0.0);
    result.degenerate = true;
    return result;
  }
  for (double& d : result.values) d /= norm;
  return result;
}

std::vector<InterestPoint> describe(const IntegralImage& ii, std::vector<InterestPoint> candidates, bool upright,
                                    DescribeStats* stats) {
  DescribeStats local;
  local.candidates = candidates.size();
  std::vector<InterestPoint> out;
  out.reserve(candidates.size());
  for (InterestPoint& p : candidates) {
    if (!upright) {
      const auto angle = assign_orientation(ii, p);
      if (!angle) {
        ++local.dropped_orientation;
        continue;
      }
      p.orientation = *angle;
    } else {
      p.orientation = 0.0;
    }
    const auto desc = compute_descriptor(ii, p, upright);
    if (!desc) {
      ++local.dropped_window;
      continue;
    }
    if (desc->degenerate) {
      ++local.degenerate;
      continue;
    }
    p.descriptor = desc->values;
    out.push_back(p);
  }
  if (stats) *stats = local;
  return out;
}

bool stronger(const InterestPoint& a, const InterestPoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.scale != b.scale) return a.scale > b.scale;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

std::vector<InterestPoint> strongest_n(std::vector<InterestPoint> points, std::size_t n) {
  const std::size_t keep = std::min(n, points.size());
  std::partial_sort(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(keep), points.end(), stronger);
  points.resize(keep);
  return points;
}

double calibrate_threshold(std::span<const std::vector<InterestPoint>> per_image_points, std::size_t target) {
  if (per_image_points.empty()) throw DataError("threshold calibration needs at least one image");
  if (target == 0) throw ConfigError("calibration target must be >= 1");

  // The k-th strongest response of each image is the largest threshold that
  // still keeps k points there; images with fewer points contribute 0.
  std::vector<double> kth;
  kth.reserve(per_image_points.size());
  for (const auto& pts : per_image_points) {
    if (pts.size() < target) {
      kth.push_back(0.0);
      continue;
    }
    std::vector<double> responses;
    responses.reserve(pts.size());
    for (const auto& p : pts) responses.push_back(p.response);
    std::nth_element(responses.begin(), responses.begin() + static_cast<std::ptrdiff_t>(target - 1),
                     responses.end(), std::greater<>());
    kth.push_back(responses[target - 1]);
  }
  const std::size_t half = (kth.size() + 1) / 2;
  std::nth_element(kth.begin(), kth.begin() + static_cast<std::ptrdiff_t>(half - 1), kth.end(), std::greater<>());
  return kth[half - 1];
}

}  // namespace houseprice::surf
