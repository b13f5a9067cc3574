#include "houseprice/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "houseprice/errors.hpp"

namespace houseprice::fusion {

RawFeatureVector assemble(const data::HouseRecord& house,
                          std::span<const std::vector<surf::InterestPoint>> per_image_points, std::size_t n) {
  if (n > kMaxFeaturesPerImage) {
    throw ConfigError("at most " + std::to_string(kMaxFeaturesPerImage) + " features per image, got " +
                      std::to_string(n));
  }
  for (data::ImageRole role : data::kImageRoles) {
    if (house.image(role).empty()) {
      throw DataError("house " + std::to_string(house.id) + " has no " + std::string(data::to_string(role)) +
                      " image");
    }
  }
  if (n > 0 && per_image_points.size() != data::kImageRoles.size()) {
    throw DimensionError("expected keypoints for 4 images, got " + std::to_string(per_image_points.size()));
  }

  RawFeatureVector out;
  out.house_id = house.id;
  out.per_image = n;
  out.values.reserve(fused_length(n));
  out.values.push_back(static_cast<double>(house.bedrooms));
  out.values.push_back(house.bathrooms);
  out.values.push_back(house.area);
  out.values.push_back(static_cast<double>(house.zipcode));

  if (n == 0) return out;
  for (std::size_t img = 0; img < data::kImageRoles.size(); ++img) {
    const auto selected = surf::strongest_n(per_image_points[img], n);
    for (const auto& p : selected) out.values.insert(out.values.end(), p.descriptor.begin(), p.descriptor.end());
    out.values.resize(out.values.size() + (n - selected.size()) * surf::kDescriptorSize, 0.0);
  }
  return out;
}

Normalizer::Normalizer(Eigen::VectorXd min, Eigen::VectorXd max)
    : min_(std::move(min)), max_(std::move(max)), constant_(static_cast<std::size_t>(min_.size())) {
  for (Eigen::Index i = 0; i < min_.size(); ++i) {
    if (!(min_[i] <= max_[i])) throw DataError("normalizer min exceeds max at dimension " + std::to_string(i));
    constant_[static_cast<std::size_t>(i)] = min_[i] == max_[i];
  }
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& training) {
  if (training.rows() < 2 || training.cols() < 1) {
    throw DataError("normalizer needs at least 2 training vectors, got " + std::to_string(training.rows()));
  }
  if (!training.allFinite()) throw DataError("normalizer input contains non-finite values");
  return Normalizer(training.colwise().minCoeff().transpose(), training.colwise().maxCoeff().transpose());
}

Normalizer Normalizer::fit(std::span<const double> training_values) {
  const Eigen::Map<const Eigen::VectorXd> col(training_values.data(), static_cast<Eigen::Index>(training_values.size()));
  return fit(Eigen::MatrixXd(col));
}

std::size_t Normalizer::constant_count() const {
  return static_cast<std::size_t>(std::count(constant_.begin(), constant_.end(), true));
}

Eigen::VectorXd Normalizer::normalize(std::span<const double> x) const {
  if (x.size() != dimension()) {
    throw DimensionError("vector of length " + std::to_string(x.size()) + " given to a normalizer of dimension " +
                         std::to_string(dimension()));
  }
  Eigen::VectorXd z(min_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (constant_[static_cast<std::size_t>(i)]) {
      z[i] = 0.0;
      continue;
    }
    const double v = (x[static_cast<std::size_t>(i)] - min_[i]) / (max_[i] - min_[i]);
    z[i] = std::clamp(v, 0.0, 1.0);
  }
  return z;
}

Eigen::MatrixXd Normalizer::normalize_rows(const Eigen::MatrixXd& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != dimension()) {
    throw DimensionError("matrix with " + std::to_string(rows.cols()) + " columns given to a normalizer of dimension " +
                         std::to_string(dimension()));
  }
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  std::vector<double> buf(static_cast<std::size_t>(rows.cols()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) buf[static_cast<std::size_t>(c)] = rows(r, c);
    out.row(r) = normalize(buf).transpose();
  }
  return out;
}

double Normalizer::normalize_value(double x) const {
  if (dimension() != 1) throw DimensionError("normalize_value needs a one-dimensional normalizer");
  return normalize(std::span<const double>(&x, 1))[0];
}

double Normalizer::denormalize(double z, std::size_t dim) const {
  if (dim >= dimension()) throw DimensionError("dimension " + std::to_string(dim) + " out of range");
  if (constant_[dim]) throw DomainError("cannot denormalize a constant dimension (min == max)");
  const auto d = static_cast<Eigen::Index>(dim);
  return z * (max_[d] - min_[d]) + min_[d];
}

nlohmann::json Normalizer::to_json() const {
  nlohmann::json doc;
  doc["format"] = "houseprice.normalizer";
  doc["version"] = 1;
  doc["dimension"] = dimension();
  doc["min"] = std::vector<double>(min_.data(), min_.data() + min_.size());
  doc["max"] = std::vector<double>(max_.data(), max_.data() + max_.size());
  doc["constant"] = constant_;
  return doc;
}

Normalizer Normalizer::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "houseprice.normalizer" || doc.value("version", 0) != 1) {
    throw DataError("not a version-1 normalizer document");
  }
  const auto mins = doc.at("min").get<std::vector<double>>();
  const auto maxs = doc.at("max").get<std::vector<double>>();
  if (mins.size() != maxs.size() || mins.size() != doc.at("dimension").get<std::size_t>()) {
    throw DataError("normalizer document has inconsistent dimensions");
  }
  Eigen::VectorXd lo = Eigen::Map<const Eigen::VectorXd>(mins.data(), static_cast<Eigen::Index>(mins.size()));
  Eigen::VectorXd hi = Eigen::Map<const Eigen::VectorXd>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
  return Normalizer(std::move(lo), std::move(hi));
}

}  // namespace houseprice::fusion
