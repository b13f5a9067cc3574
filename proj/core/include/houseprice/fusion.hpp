#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "houseprice/data.hpp"
#include "houseprice/surf.hpp"

namespace houseprice::fusion {

inline constexpr std::size_t kTextualAttributes = 4;  // bedrooms, bathrooms, area, zipcode
inline constexpr std::size_t kMaxFeaturesPerImage = 15;

/// Length of a fused vector holding `n` descriptors per image.
constexpr std::size_t fused_length(std::size_t n) {
  return kTextualAttributes + data::kImageRoles.size() * n * surf::kDescriptorSize;
}

/// [bedrooms, bathrooms, area, zipcode] followed by n descriptors of each
/// image in ImageRole order, strongest first, zero-padded when an image has
/// fewer than n points.
struct RawFeatureVector {
  int house_id = 0;
  std::size_t per_image = 0;
  std::vector<double> values;
};

RawFeatureVector assemble(const data::HouseRecord& house,
                          std::span<const std::vector<surf::InterestPoint>> per_image_points, std::size_t n);

/// Per-dimension min-max scaler z = (x - min) / (max - min).
class Normalizer {
public:
  Normalizer() = default;  // zero-dimensional; use fit() or from_json()

  /// Fits on the rows of `training` (one sample per row). Needs >= 2 rows.
  static Normalizer fit(const Eigen::MatrixXd& training);
  static Normalizer fit(std::span<const double> training_values);  // single dimension

  std::size_t dimension() const { return static_cast<std::size_t>(min_.size()); }
  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }
  bool is_constant(std::size_t dim) const { return constant_[dim]; }
  std::size_t constant_count() const;

  /// Scales into [0, 1]; values outside the fitted range are clamped and
  /// constant dimensions map to 0. Throws DimensionError on length mismatch.
  Eigen::VectorXd normalize(std::span<const double> x) const;
  Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& rows) const;

  /// Scalar version for a one-dimensional normalizer (targets).
  double normalize_value(double x) const;

  /// x = z * (max - min) + min on dimension `dim`. Throws DomainError when
  /// that dimension is constant.
  double denormalize(double z, std::size_t dim = 0) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& doc);

  friend bool operator==(const Normalizer& a, const Normalizer& b) {
    return a.min_ == b.min_ && a.max_ == b.max_ && a.constant_ == b.constant_;
  }

private:
  Normalizer(Eigen::VectorXd min, Eigen::VectorXd max);

  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
  std::vector<bool> constant_;
};

inline double denormalize_target(const Normalizer& nrm, double z) { return nrm.denormalize(z, 0); }

}  // namespace houseprice::fusion
