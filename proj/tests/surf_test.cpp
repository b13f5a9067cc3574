#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "houseprice/errors.hpp"
#include "houseprice/surf.hpp"
#include "oracles.hpp"

using namespace houseprice;
using imgproc::GrayImage;
using imgproc::IntegralImage;
using surf::InterestPoint;
using surf::SurfParams;

namespace {

double angular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2 * std::numbers::pi);
  return std::min(d, 2 * std::numbers::pi - d);
}

const InterestPoint& strongest(const std::vector<InterestPoint>& pts) {
  return *std::min_element(pts.begin(), pts.end(), surf::stronger);
}

// Asymmetric scene: blobs of different sizes and signs, laid out in a 128
// square centred in the image.
GrayImage scene(int size) {
  const double o = (size - 128) / 2;  // integer offset keeps centres on pixels
  const oracle::Blob blobs[] = {
      {40 + o, 44 + o, 3.0, -150}, {86 + o, 38 + o, 4.5, -120}, {64 + o, 90 + o, 2.5, 110},
      {30 + o, 96 + o, 5.0, -100}, {96 + o, 88 + o, 3.5, -130},
  };
  return oracle::blob_image(size, size, 140, blobs);
}

}  // namespace

TEST(SurfParams, Validation) {
  SurfParams p;
  p.octaves = 0;
  EXPECT_THROW(surf::validate(p), ConfigError);
  p.octaves = 5;
  EXPECT_THROW(surf::validate(p), ConfigError);
  p.octaves = 3;
  p.hessian_threshold = -1;
  EXPECT_THROW(surf::validate(p), ConfigError);
}

TEST(ResponseMap, ConstantImageIsZero) {
  const IntegralImage ii(GrayImage(64, 64, 173));
  for (int size : {9, 15, 27}) {
    const auto map = surf::hessian_response_map(ii, size, 1);
    EXPECT_TRUE(map.fits);
    for (double v : map.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(ResponseMap, FilterLargerThanImageIsFlagged) {
  const IntegralImage ii(GrayImage(12, 12, 9));
  const auto map = surf::hessian_response_map(ii, 15, 1);
  EXPECT_FALSE(map.fits);
  for (double v : map.values) EXPECT_EQ(v, 0.0);
}

TEST(ResponseMap, DiscArgmaxNearCentre) {
  std::vector<std::uint8_t> data(64 * 64, 255);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (std::hypot(x - 32, y - 32) <= 4.0) data[y * 64 + x] = 0;
  const IntegralImage ii(GrayImage(64, 64, data));
  const auto map = surf::hessian_response_map(ii, 9, 1);
  int best_c = 0, best_r = 0;
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c)
      if (std::abs(map.at(c, r)) > std::abs(map.at(best_c, best_r))) best_c = c, best_r = r;
  EXPECT_LE(std::abs(best_c - 32), 2);
  EXPECT_LE(std::abs(best_r - 32), 2);
}

TEST(ResponseMap, QuadraticInContrast) {
  // Pixels in {0, 128} scale exactly to {0, 255}.
  std::mt19937_64 rng(3);
  std::vector<std::uint8_t> lo(48 * 48), hi(48 * 48);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const bool on = rng() & 1;
    lo[i] = on ? 128 : 0;
    hi[i] = on ? 255 : 0;
  }
  const auto a = surf::hessian_response_map(IntegralImage(GrayImage(48, 48, lo)), 15, 1);
  const auto b = surf::hessian_response_map(IntegralImage(GrayImage(48, 48, hi)), 15, 1);
  const double k2 = (255.0 / 128.0) * (255.0 / 128.0);
  int compared = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] == 0.0) {
      EXPECT_EQ(b.values[i], 0.0);
      continue;
    }
    EXPECT_NEAR(b.values[i] / a.values[i], k2, 1e-9 * k2);
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(Detect, ConstantImageHasNoPoints) {
  const IntegralImage ii(GrayImage(128, 128, 200));
  SurfParams p;
  p.hessian_threshold = 0.0;
  EXPECT_TRUE(surf::detect_interest_points(ii, p).empty());
}

TEST(Detect, SingleBlobLocalized) {
  const oracle::Blob blob[] = {{64, 64, 3.0, -200}};
  const IntegralImage ii(oracle::blob_image(128, 128, 255, blob));
  SurfParams p;
  p.hessian_threshold = 50.0;
  const auto pts = surf::detect_interest_points(ii, p);
  ASSERT_FALSE(pts.empty());
  for (const auto& q : pts) EXPECT_LT(std::hypot(q.x - 64, q.y - 64), 6.0) << "stray detection";
  const auto& best = strongest(pts);
  EXPECT_LE(std::hypot(best.x - 64, best.y - 64), 2.0);
  EXPECT_EQ(best.laplacian_sign, 1);  // dark blob: positive trace
  for (const auto& q : pts) {
    EXPECT_GE(q.response, p.hessian_threshold);
    EXPECT_GE(q.scale, 1.2);
  }
}

TEST(Detect, LargerBlobHasLargerScale) {
  const oracle::Blob blobs[] = {{40, 64, 3.0, -200}, {100, 64, 7.0, -200}};
  const IntegralImage ii(oracle::blob_image(160, 128, 255, blobs));
  SurfParams p;
  p.hessian_threshold = 20.0;
  const auto pts = surf::detect_interest_points(ii, p);
  std::vector<InterestPoint> small, large;
  for (const auto& q : pts) (q.x < 70 ? small : large).push_back(q);
  ASSERT_FALSE(small.empty());
  ASSERT_FALSE(large.empty());
  EXPECT_GT(strongest(large).scale, strongest(small).scale);
}

TEST(Detect, TranslationEquivariant) {
  SurfParams p;
  p.hessian_threshold = 20.0;
  auto check = [&](int dx, int dy, int octaves) {
    p.octaves = octaves;
    const oracle::Blob blobs[] = {{50, 52, 3.0, -150}, {80, 70, 4.0, -120}, {62, 100, 2.5, 110}};
    const oracle::Blob moved[] = {{50.0 + dx, 52.0 + dy, 3.0, -150}, {80.0 + dx, 70.0 + dy, 4.0, -120},
                                  {62.0 + dx, 100.0 + dy, 2.5, 110}};
    const auto a = surf::detect_interest_points(IntegralImage(oracle::blob_image(176, 176, 140, blobs)), p);
    const auto b = surf::detect_interest_points(IntegralImage(oracle::blob_image(176, 176, 140, moved)), p);
    ASSERT_FALSE(a.empty());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].response, b[i].response);
      EXPECT_EQ(a[i].scale, b[i].scale);
      EXPECT_NEAR(b[i].x - a[i].x, dx, 1e-12);
      EXPECT_NEAR(b[i].y - a[i].y, dy, 1e-12);
    }
  };
  check(3, 5, 1);   // any shift on the unit-step octave
  check(8, 16, 4);  // multiples of the coarsest sampling step for all octaves
}

TEST(Detect, ContrastCovariance) {
  // Same point set once the threshold scales with k^2.
  std::vector<std::uint8_t> lo(128 * 128), hi(128 * 128);
  const auto base = scene(128);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const bool on = base.data()[i] < 110;
    lo[i] = on ? 128 : 0;
    hi[i] = on ? 255 : 0;
  }
  SurfParams p;
  p.hessian_threshold = 100.0;
  const auto a = surf::detect_interest_points(IntegralImage(GrayImage(128, 128, lo)), p);
  p.hessian_threshold = 100.0 * (255.0 / 128.0) * (255.0 / 128.0);
  const auto b = surf::detect_interest_points(IntegralImage(GrayImage(128, 128, hi)), p);
  ASSERT_FALSE(a.empty());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
  }
}

TEST(Orientation, StepEdgePointsAlongGradient) {
  std::vector<std::uint8_t> data(96 * 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) data[y * 96 + x] = x < 48 ? 40 : 210;
  const GrayImage edge(96, 96, data);
  InterestPoint p;
  p.x = 48;
  p.y = 48;
  p.scale = 2.4;
  const auto angle = surf::assign_orientation(IntegralImage(edge), p);
  ASSERT_TRUE(angle.has_value());
  EXPECT_LT(angular_distance(*angle, 0.0), std::numbers::pi / 12);

  // (x, y) -> (y, 95 - x): the +x gradient now points along -y.
  const auto turned = surf::assign_orientation(IntegralImage(oracle::rotate90(edge)), p);
  ASSERT_TRUE(turned.has_value());
  EXPECT_LT(angular_distance(*turned, 1.5 * std::numbers::pi), std::numbers::pi / 12);
}

TEST(Orientation, MarginViolationSignalled) {
  InterestPoint p;
  p.x = 3;
  p.y = 3;
  p.scale = 2.4;
  EXPECT_FALSE(surf::assign_orientation(IntegralImage(GrayImage(64, 64, 10)), p).has_value());
  EXPECT_FALSE(surf::compute_descriptor(IntegralImage(GrayImage(64, 64, 10)), p, true).has_value());
}

TEST(Descriptor, ConstantPatchIsDegenerate) {
  InterestPoint p;
  p.x = 50;
  p.y = 50;
  p.scale = 1.2;
  const auto d = surf::compute_descriptor(IntegralImage(GrayImage(100, 100, 77)), p, false);
  ASSERT_TRUE(d.has_value());
  EXPECT_TRUE(d->degenerate);
  for (double v : d->values) EXPECT_EQ(v, 0.0);
}

TEST(Descriptor, UnitNorm) {
  const IntegralImage ii(scene(256));
  SurfParams p;
  p.hessian_threshold = 10.0;
  const auto pts = surf::describe(ii, surf::detect_interest_points(ii, p), false);
  ASSERT_GE(pts.size(), 3u);
  for (const auto& q : pts) {
    double n2 = 0;
    for (double v : q.descriptor) n2 += v * v;
    EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-6);
    EXPECT_GE(q.orientation, 0.0);
    EXPECT_LT(q.orientation, 2 * std::numbers::pi);
  }
}

TEST(Descriptor, SymmetricBlobMatchesUpright) {
  // Large enough that rounding rotated sample positions to pixels is minor.
  const oracle::Blob blob[] = {{128, 128, 8.0, -180}};
  const IntegralImage ii(oracle::blob_image(256, 256, 220, blob));
  SurfParams p;
  p.hessian_threshold = 10.0;
  const auto best = strongest(surf::detect_interest_points(ii, p));
  auto oriented = best;
  oriented.orientation = *surf::assign_orientation(ii, best);
  const auto a = surf::compute_descriptor(ii, oriented, false);
  const auto b = surf::compute_descriptor(ii, best, true);
  ASSERT_TRUE(a && b);
  EXPECT_LT(oracle::descriptor_distance(a->values, b->values), 0.05);
}

TEST(Descriptor, RotationInvariantAtNinetyDegrees) {
  const auto img = scene(257);  // W - 1 divisible by every sampling step
  const auto rot = oracle::rotate90(img);
  SurfParams p;
  p.hessian_threshold = 20.0;
  const IntegralImage ia(img), ib(rot);
  const auto a = surf::strongest_n(surf::describe(ia, surf::detect_interest_points(ia, p), false), 5);
  const auto b = surf::describe(ib, surf::detect_interest_points(ib, p), false);
  ASSERT_EQ(a.size(), 5u);
  for (const auto& q : a) {
    const double ex = q.y, ey = 256 - q.x;
    const InterestPoint* match = nullptr;
    double best = 1e9;
    for (const auto& r : b) {
      const double d = std::hypot(r.x - ex, r.y - ey) + std::abs(r.scale - q.scale);
      if (d < best) best = d, match = &r;
    }
    ASSERT_NE(match, nullptr);
    EXPECT_LT(best, 1.0);
    EXPECT_LT(oracle::descriptor_distance(q.descriptor, match->descriptor), 0.3);
  }
}

TEST(Describe, DeterministicAcrossRuns) {
  const IntegralImage ii(scene(256));
  SurfParams p;
  p.hessian_threshold = 10.0;
  const auto a = surf::describe(ii, surf::detect_interest_points(ii, p), false);
  const auto b = surf::describe(ii, surf::detect_interest_points(ii, p), false);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].descriptor, b[i].descriptor);
  }
}

TEST(StrongestN, ZeroGivesEmpty) {
  std::vector<InterestPoint> pts(3);
  EXPECT_TRUE(surf::strongest_n(pts, 0).empty());
}

TEST(StrongestN, SortSemantics) {
  std::vector<InterestPoint> pts(3);
  pts[0].response = 5;
  pts[1].response = 9;
  pts[2].response = 1;
  const auto top = surf::strongest_n(pts, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].response, 9);
  EXPECT_EQ(top[1].response, 5);
}

TEST(StrongestN, TieBreaks) {
  std::vector<InterestPoint> pts(4);
  for (auto& q : pts) q.response = 1.0;
  pts[0].scale = 2.0;
  pts[1].scale = 3.0;
  pts[2].scale = 2.0, pts[2].y = -1.0;
  pts[3].scale = 2.0, pts[3].y = -1.0, pts[3].x = -1.0;
  const auto top = surf::strongest_n(pts, 4);
  EXPECT_EQ(top[0].scale, 3.0);
  EXPECT_EQ(top[1].x, -1.0);
  EXPECT_EQ(top[2].y, -1.0);
  EXPECT_EQ(top[3].y, 0.0);
}

TEST(StrongestN, MatchesFullSortPrefix) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<InterestPoint> pts(10000);
  for (auto& q : pts) q.response = u(rng), q.x = u(rng), q.y = u(rng);
  auto sorted = pts;
  std::sort(sorted.begin(), sorted.end(), surf::stronger);
  const auto top = surf::strongest_n(pts, 15);
  ASSERT_EQ(top.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(top[i].response, sorted[i].response);
  EXPECT_EQ(surf::strongest_n(std::vector<InterestPoint>(4), 15).size(), 4u);
}

TEST(Calibrate, KeepsTargetOnHalfTheImages) {
  std::vector<std::vector<InterestPoint>> per_image(3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int k = 1; k <= 5; ++k) {
      InterestPoint q;
      q.response = 10.0 * (i + 1) * k;
      per_image[i].push_back(q);
    }
  }
  // 2nd strongest per image: 40, 80, 120; the middle keeps two images.
  EXPECT_EQ(surf::calibrate_threshold(per_image, 2), 80.0);
  EXPECT_EQ(surf::calibrate_threshold(per_image, 6), 0.0);
  EXPECT_THROW(surf::calibrate_threshold(per_image, 0), ConfigError);
}
