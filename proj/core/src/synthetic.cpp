#include "houseprice/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "houseprice/errors.hpp"
#include "houseprice/format.hpp"
#include "houseprice/image_io.hpp"

namespace houseprice::synthetic {

namespace {

double jitter_px(std::mt19937_64& rng, int size) {
  return size / 8.0 * (2.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng) - 1.0);
}

constexpr std::array<std::int64_t, 8> kZipcodes{93446, 92276, 91901, 92880, 94531, 93510, 96019, 92677};

imgproc::RgbImage render_photo(const SyntheticConfig& cfg, double quality, std::mt19937_64& rng) {
  const int size = cfg.image_size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ramp_angle = std::numbers::pi / 2.0 + 0.2 * (unit(rng) - 0.5);  // lit from above
  const double ramp_lo = 120.0 + 60.0 * unit(rng);
  const double ramp_hi = ramp_lo + cfg.background_ramp;
  const double tint = 6.0 * (unit(rng) - 0.5);

  std::vector<double> field(static_cast<std::size_t>(size) * size);
  const double cx0 = size / 2.0;
  const double half_diag = size / std::sqrt(2.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double t = ((x - cx0) * std::cos(ramp_angle) + (y - cx0) * std::sin(ramp_angle)) / (2.0 * half_diag) + 0.5;
      field[static_cast<std::size_t>(y) * size + x] = ramp_lo + (ramp_hi - ramp_lo) * t;
    }
  }

  auto add_blob = [&](double bx, double by, double sigma_major, double sigma_minor, double angle, double amplitude) {
    const double c = std::cos(angle), s = std::sin(angle);
    const int reach = static_cast<int>(std::ceil(4.0 * sigma_major));
    for (int y = std::max(0, static_cast<int>(by) - reach); y <= std::min(size - 1, static_cast<int>(by) + reach); ++y) {
      for (int x = std::max(0, static_cast<int>(bx) - reach); x <= std::min(size - 1, static_cast<int>(bx) + reach); ++x) {
        const double u = (x - bx) * c + (y - by) * s;
        const double v = -(x - bx) * s + (y - by) * c;
        const double g = std::exp(-(u * u) / (2 * sigma_major * sigma_major) - (v * v) / (2 * sigma_minor * sigma_minor));
        field[static_cast<std::size_t>(y) * size + x] += amplitude * g;
      }
    }
  };

  auto add_ring = [&](double bx, double by, double radius, double width, double amplitude) {
    const int reach = static_cast<int>(std::ceil(radius + 4.0 * width));
    for (int y = std::max(0, static_cast<int>(by) - reach); y <= std::min(size - 1, static_cast<int>(by) + reach); ++y) {
      for (int x = std::max(0, static_cast<int>(bx) - reach); x <= std::min(size - 1, static_cast<int>(bx) + reach); ++x) {
        const double d = std::hypot(x - bx, y - by) - radius;
        field[static_cast<std::size_t>(y) * size + x] += amplitude * std::exp(-d * d / (2 * width * width));
      }
    }
  };

  const double bx = cx0 + jitter_px(rng, size), by = cx0 + jitter_px(rng, size);
  const double sigma = 2.2;
  add_blob(bx, by, sigma, sigma, 0.0, -115.0);
  add_ring(bx, by, 7.0 * sigma, 1.5 * sigma, 70.0 * quality);

  // Clutter stays clear of the signature's neighbourhood.
  for (int k = 0; k < cfg.clutter_blobs; ++k) {
    const double r = 1.4 + 1.4 * unit(rng);
    const double amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (20.0 + 20.0 * unit(rng));
    double x = 0, y = 0;
    do {
      x = 8 + unit(rng) * (size - 16);
      y = 8 + unit(rng) * (size - 16);
    } while (std::hypot(x - bx, y - by) < cfg.clutter_clearance);
    add_blob(x, y, r, r, 0.0, amp);
  }

  std::uniform_real_distribution<double> noise(-cfg.pixel_noise, cfg.pixel_noise);
  std::vector<imgproc::Rgb> pixels;
  pixels.reserve(field.size());
  for (double v : field) {
    const double g = cfg.pixel_noise > 0.0 ? v + noise(rng) : v;
    auto clamp8 = [](double x) { return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L)); };
    pixels.push_back({clamp8(g + tint), clamp8(g), clamp8(g - tint)});
  }
  return imgproc::RgbImage(size, size, std::move(pixels));
}

}  // namespace

std::vector<SyntheticHouse> generate_houses(const SyntheticConfig& cfg) {
  if (cfg.houses < 1) throw ConfigError("synthetic dataset needs at least one house");
  if (cfg.image_size < 64) throw ConfigError("synthetic images must be at least 64x64");
  if (!(cfg.visual_share >= 0.0 && cfg.visual_share <= 1.0)) throw ConfigError("visual_share must be in [0, 1]");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Location value rises with the zipcode's rank.
  std::array<double, kZipcodes.size()> zip_effect{};
  for (std::size_t z = 0; z < kZipcodes.size(); ++z) {
    const auto rank = std::count_if(kZipcodes.begin(), kZipcodes.end(), [&](std::int64_t o) { return o < kZipcodes[z]; });
    zip_effect[z] = static_cast<double>(rank) / (kZipcodes.size() - 1);
  }

  std::vector<SyntheticHouse> houses;
  houses.reserve(cfg.houses);
  for (std::size_t i = 0; i < cfg.houses; ++i) {
    SyntheticHouse h;
    h.record.id = static_cast<int>(i) + 1;
    h.record.area = std::round(900.0 + 3300.0 * unit(rng));
    h.record.bedrooms = static_cast<int>(std::clamp(std::lround(h.record.area / 800.0 + unit(rng) - 0.5), 1L, 7L));
    h.record.bathrooms = static_cast<double>(
        std::clamp(std::lround(0.7 * h.record.bedrooms + unit(rng) - 0.5), 1L, 5L));
    const auto zip_idx = static_cast<std::size_t>(unit(rng) * kZipcodes.size()) % kZipcodes.size();
    h.record.zipcode = kZipcodes[zip_idx];

    double mean_quality = 0.0;
    for (std::size_t r = 0; r < h.images.size(); ++r) {
      h.quality[r] = unit(rng);
      mean_quality += h.quality[r] / 4.0;
      h.images[r] = render_photo(cfg, h.quality[r], rng);
    }

    // Area scales a per-square-foot value set by location and photo quality.
    const double area_term = 0.5 + 0.5 * (h.record.area - 900.0) / 3300.0;
    const double value_term = (1.0 - cfg.visual_share) * zip_effect[zip_idx] + cfg.visual_share * mean_quality;
    const double score = area_term * value_term + cfg.noise * gauss(rng);
    h.record.price = std::round(std::max(22000.0, 80000.0 + 900000.0 * score));
    houses.push_back(std::move(h));
  }
  return houses;
}

void write_dataset(const std::filesystem::path& root, std::span<const SyntheticHouse> houses) {
  std::filesystem::create_directories(root);
  std::ofstream info(root / std::string(data::kHousesInfoFile));
  if (!info) throw DataError("cannot write " + (root / std::string(data::kHousesInfoFile)).string());
  for (const auto& h : houses) {
    info << h.record.bedrooms << ' ' << format_double(h.record.bathrooms) << ' ' << format_double(h.record.area) << ' '
         << h.record.zipcode << ' ' << format_double(h.record.price) << '\n';
    for (data::ImageRole role : data::kImageRoles) {
      const auto name = std::to_string(h.record.id) + "_" + std::string(data::to_string(role)) + ".png";
      imgproc::write_rgb(root / name, h.images[static_cast<std::size_t>(role)]);
    }
  }
}

}  // namespace houseprice::synthetic
