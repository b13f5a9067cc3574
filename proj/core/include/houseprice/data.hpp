#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace houseprice::data {

/// Photo roles, in the order their descriptors are concatenated.
enum class ImageRole { frontal = 0, bedroom = 1, kitchen = 2, bathroom = 3 };

inline constexpr std::array<ImageRole, 4> kImageRoles{ImageRole::frontal, ImageRole::bedroom, ImageRole::kitchen,
                                                      ImageRole::bathroom};

std::string_view to_string(ImageRole role);
std::optional<ImageRole> parse_role(std::string_view name);

struct HouseRecord {
  int id = 0;  // 1-based, matches the image filename prefix
  std::array<std::filesystem::path, 4> image_paths;  // indexed by ImageRole
  int bedrooms = 0;
  double bathrooms = 0.0;
  double area = 0.0;  // square feet
  std::int64_t zipcode = 0;
  double price = 0.0;  // USD

  const std::filesystem::path& image(ImageRole role) const { return image_paths[static_cast<std::size_t>(role)]; }
  friend bool operator==(const HouseRecord&, const HouseRecord&) = default;
};

/// Throws DataError naming the house when a record breaks the dataset invariants.
void validate(const HouseRecord& house);

inline constexpr std::string_view kHousesInfoFile = "HousesInfo.txt";

/// Loads the image+text houses layout: `root/HousesInfo.txt` holds one
/// whitespace-separated row per house (bedrooms bathrooms area zipcode price),
/// and every house id (1-based row index) has `<id>_<role>.<ext>` images in
/// `root` for all four roles.
std::vector<HouseRecord> load_houses_dataset(const std::filesystem::path& root,
                                             std::string_view attributes_file = kHousesInfoFile);

struct DatasetStats {
  std::size_t count = 0;
  double price_mean = 0, price_min = 0, price_max = 0;
  double area_mean = 0, area_min = 0, area_max = 0;
  double bedrooms_mean = 0, bathrooms_mean = 0;
};

DatasetStats describe(const std::vector<HouseRecord>& houses);

struct TabularDataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::string target_name;
  std::string provenance;

  std::size_t size() const { return rows.size(); }
  std::size_t feature_count() const { return feature_names.size(); }
};

/// Reads a numeric table (comma- or whitespace-delimited, optional header).
/// `target_column` is a header name or a 0-based column index; empty selects
/// the last column.
TabularDataset load_tabular_csv(const std::filesystem::path& path, std::string_view target_column = {});

struct SplitSpec {
  std::vector<double> fractions;  // train[, val], test; sum to 1
  std::uint64_t seed = 0;

  static SplitSpec train_test(std::uint64_t seed) { return {{0.8, 0.2}, seed}; }
  static SplitSpec train_val_test(std::uint64_t seed) { return {{0.7, 0.15, 0.15}, seed}; }
};

/// Part sizes by largest-remainder rounding of fraction * n (ties go to the
/// earlier part). Throws ConfigError when any part would be empty.
std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& fractions);

/// Seeded permutation of [0, n) cut into consecutive parts of split_sizes().
std::vector<std::vector<std::size_t>> split(std::size_t n, const SplitSpec& spec);

}  // namespace houseprice::data
