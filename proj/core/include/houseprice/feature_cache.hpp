#pragma once

#include <array>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "houseprice/data.hpp"
#include "houseprice/surf.hpp"

namespace houseprice::features {

/// Canonical text of the extraction parameters; part of every cache key.
std::string params_fingerprint(const surf::SurfParams& params);

nlohmann::json point_to_json(const surf::InterestPoint& p);
surf::InterestPoint point_from_json(const nlohmann::json& doc);

/// The stored keypoints (at most kMaxFeaturesPerImage, strongest first) of
/// one house, indexed by ImageRole.
struct HouseFeatures {
  int house_id = 0;
  std::array<std::vector<surf::InterestPoint>, 4> per_image;
};

struct ExtractSummary {
  std::size_t images = 0;
  std::size_t computed = 0;
  std::size_t reused = 0;
  surf::DescribeStats describe;
  std::size_t fewer_than_max = 0;  // images with < kMaxFeaturesPerImage points
};

/// Cache file of one photo: `<cache_root>/<params hash>/<id>_<role>.json`.
std::filesystem::path cache_file(const std::filesystem::path& cache_root, const surf::SurfParams& params, int house_id,
                                 data::ImageRole role);

/// Extracts (or reuses cached) keypoints for every photo with `jobs` worker
/// threads. Entries are keyed by a hash of the image bytes and parameters, so
/// a changed photo or parameter set is recomputed. Output order follows
/// `houses` regardless of scheduling.
std::vector<HouseFeatures> extract_dataset(const std::vector<data::HouseRecord>& houses,
                                           const std::filesystem::path& cache_root, const surf::SurfParams& params,
                                           unsigned jobs = 1, ExtractSummary* summary = nullptr);

/// Reads a complete cache. Throws DataError naming the first photo whose
/// entry is missing or stale.
std::vector<HouseFeatures> load_dataset_features(const std::vector<data::HouseRecord>& houses,
                                                 const std::filesystem::path& cache_root,
                                                 const surf::SurfParams& params);

/// Hessian threshold at which at least half of the dataset's photos keep
/// `target` described points.
double calibrate_dataset_threshold(const std::vector<data::HouseRecord>& houses, const surf::SurfParams& params,
                                   std::size_t target, unsigned jobs = 1);

}  // namespace houseprice::features
