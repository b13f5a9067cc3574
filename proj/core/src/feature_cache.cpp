#include "houseprice/feature_cache.hpp"

#include <unistd.h>

#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "houseprice/errors.hpp"
#include "houseprice/features.hpp"
#include "houseprice/fusion.hpp"
#include "houseprice/hash.hpp"
#include "houseprice/image_io.hpp"
#include "houseprice/parallel.hpp"

namespace houseprice::features {

namespace fs = std::filesystem;

namespace {

constexpr int kCacheVersion = 2;

std::string content_hash(const std::vector<std::uint8_t>& bytes, const std::string& fingerprint) {
  Sha256 h;
  h.update(bytes);
  h.update(std::string_view("\n"));
  h.update(fingerprint);
  return h.hex_digest();
}

nlohmann::json stats_to_json(const surf::DescribeStats& s) {
  return {{"candidates", s.candidates},
          {"dropped_orientation", s.dropped_orientation},
          {"dropped_window", s.dropped_window},
          {"degenerate", s.degenerate}};
}

surf::DescribeStats stats_from_json(const nlohmann::json& doc) {
  surf::DescribeStats s;
  s.candidates = doc.at("candidates").get<std::size_t>();
  s.dropped_orientation = doc.at("dropped_orientation").get<std::size_t>();
  s.dropped_window = doc.at("dropped_window").get<std::size_t>();
  s.degenerate = doc.at("degenerate").get<std::size_t>();
  return s;
}

void add_stats(surf::DescribeStats& total, const surf::DescribeStats& s) {
  total.candidates += s.candidates;
  total.dropped_orientation += s.dropped_orientation;
  total.dropped_window += s.dropped_window;
  total.degenerate += s.degenerate;
}

struct Entry {
  std::vector<surf::InterestPoint> points;
  surf::DescribeStats stats;
  bool reused = false;
};

// Returns the cached entry when it exists and its hash matches.
std::optional<Entry> read_entry(const fs::path& file, const std::string& hash) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (doc.value("version", 0) != kCacheVersion || doc.value("content_hash", "") != hash) return std::nullopt;
  Entry e;
  e.reused = true;
  e.stats = stats_from_json(doc.at("stats"));
  for (const auto& p : doc.at("points")) e.points.push_back(point_from_json(p));
  return e;
}

void write_entry(const fs::path& file, const std::string& hash, const Entry& e) {
  nlohmann::json doc;
  doc["format"] = "houseprice.features";
  doc["version"] = kCacheVersion;
  doc["content_hash"] = hash;
  doc["stats"] = stats_to_json(e.stats);
  auto points = nlohmann::json::array();
  for (const auto& p : e.points) points.push_back(point_to_json(p));
  doc["points"] = std::move(points);

  // Write-then-rename so a crash never leaves a truncated entry behind. The
  // temporary name is unique per process and thread; concurrent writers of the
  // same entry produce identical content, so the last rename wins harmlessly.
  std::ostringstream suffix;
  suffix << ".tmp." << ::getpid() << '.' << std::this_thread::get_id();
  const fs::path tmp = file.string() + suffix.str();
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write cache entry " + tmp.string());
    out << doc.dump();
  }
  fs::rename(tmp, file);
}

}  // namespace

std::string params_fingerprint(const surf::SurfParams& params) {
  surf::validate(params);
  nlohmann::json doc{{"hessian_threshold", params.hessian_threshold},
                     {"octaves", params.octaves},
                     {"upright", params.upright},
                     {"initial_step", params.initial_step},
                     {"max_points", fusion::kMaxFeaturesPerImage},
                     {"cache_version", kCacheVersion}};
  return doc.dump();
}

nlohmann::json point_to_json(const surf::InterestPoint& p) {
  return {{"x", p.x},
          {"y", p.y},
          {"scale", p.scale},
          {"response", p.response},
          {"laplacian_sign", p.laplacian_sign},
          {"orientation", p.orientation},
          {"descriptor", p.descriptor}};
}

surf::InterestPoint point_from_json(const nlohmann::json& doc) {
  surf::InterestPoint p;
  p.x = doc.at("x").get<double>();
  p.y = doc.at("y").get<double>();
  p.scale = doc.at("scale").get<double>();
  p.response = doc.at("response").get<double>();
  p.laplacian_sign = doc.at("laplacian_sign").get<int>();
  p.orientation = doc.at("orientation").get<double>();
  const auto d = doc.at("descriptor").get<std::vector<double>>();
  if (d.size() != surf::kDescriptorSize) throw DataError("cached descriptor has wrong length");
  std::copy(d.begin(), d.end(), p.descriptor.begin());
  return p;
}

fs::path cache_file(const fs::path& cache_root, const surf::SurfParams& params, int house_id, data::ImageRole role) {
  const std::string dir = sha256_hex(params_fingerprint(params)).substr(0, 16);
  return cache_root / dir / (std::to_string(house_id) + "_" + std::string(data::to_string(role)) + ".json");
}

std::vector<HouseFeatures> extract_dataset(const std::vector<data::HouseRecord>& houses, const fs::path& cache_root,
                                           const surf::SurfParams& params, unsigned jobs, ExtractSummary* summary) {
  const std::string fingerprint = params_fingerprint(params);
  std::vector<HouseFeatures> out(houses.size());
  std::vector<Entry> entries(houses.size() * 4);
  if (!houses.empty()) fs::create_directories(cache_file(cache_root, params, 0, data::ImageRole::frontal).parent_path());

  parallel_for(entries.size(), jobs, [&](std::size_t k) {
    const auto& house = houses[k / 4];
    const auto role = data::kImageRoles[k % 4];
    const auto bytes = imgproc::read_file_bytes(house.image(role));
    const std::string hash = content_hash(bytes, fingerprint);
    const fs::path file = cache_file(cache_root, params, house.id, role);
    if (auto cached = read_entry(file, hash)) {
      entries[k] = std::move(*cached);
      return;
    }
    Entry e;
    e.points = extract_image_features(imgproc::read_rgb(house.image(role)), params, fusion::kMaxFeaturesPerImage,
                                      &e.stats);
    write_entry(file, hash, e);
    entries[k] = std::move(e);
  });

  ExtractSummary s;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& e = entries[k];
    ++s.images;
    ++(e.reused ? s.reused : s.computed);
    add_stats(s.describe, e.stats);
    if (e.points.size() < fusion::kMaxFeaturesPerImage) ++s.fewer_than_max;
    out[k / 4].house_id = houses[k / 4].id;
    out[k / 4].per_image[k % 4] = std::move(e.points);
  }
  if (summary) *summary = s;
  return out;
}

std::vector<HouseFeatures> load_dataset_features(const std::vector<data::HouseRecord>& houses,
                                                 const fs::path& cache_root, const surf::SurfParams& params) {
  const std::string fingerprint = params_fingerprint(params);
  std::vector<HouseFeatures> out;
  out.reserve(houses.size());
  for (const auto& house : houses) {
    HouseFeatures hf;
    hf.house_id = house.id;
    for (data::ImageRole role : data::kImageRoles) {
      const fs::path file = cache_file(cache_root, params, house.id, role);
      const std::string hash = content_hash(imgproc::read_file_bytes(house.image(role)), fingerprint);
      auto entry = read_entry(file, hash);
      if (!entry) {
        throw DataError("no up-to-date cached features for house " + std::to_string(house.id) + " " +
                        std::string(data::to_string(role)) + " (" + file.string() + "); run extract first");
      }
      hf.per_image[static_cast<std::size_t>(role)] = std::move(entry->points);
    }
    out.push_back(std::move(hf));
  }
  return out;
}

double calibrate_dataset_threshold(const std::vector<data::HouseRecord>& houses, const surf::SurfParams& params,
                                   std::size_t target, unsigned jobs) {
  surf::SurfParams probe = params;
  probe.hessian_threshold = 0.0;
  std::vector<std::vector<surf::InterestPoint>> points(houses.size() * 4);
  parallel_for(points.size(), jobs, [&](std::size_t k) {
    const auto& house = houses[k / 4];
    points[k] = extract_image_features(imgproc::read_rgb(house.image(data::kImageRoles[k % 4])), probe,
                                       std::numeric_limits<std::size_t>::max());
  });
  return surf::calibrate_threshold(points, target);
}

}  // namespace houseprice::features
