#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "houseprice/data.hpp"
#include "houseprice/image.hpp"

namespace houseprice::synthetic {

/// Houses whose price depends on both textual attributes and image content.
///
/// Every photo shows a vertical brightness ramp (lit from above), faint round
/// clutter blobs away from the centre, and a dark "signature" blob near the
/// centre surrounded by a soft bright halo. The halo's brightness encodes a
/// hidden per-photo quality q in [0, 1]. The price is an area factor times a
/// per-area value that mixes a zipcode effect with the mean quality of the four
/// photos, weighted by `visual_share`.
struct SyntheticConfig {
  std::size_t houses = 535;
  int image_size = 160;
  std::uint64_t seed = 2024;
  double visual_share = 0.8;
  double noise = 0.01;  // std-dev of the price noise relative to the score range
  int clutter_blobs = 5;
  double background_ramp = 110.0;   // intensity change of the background across the image
  double pixel_noise = 0.0;         // half-width of uniform per-pixel noise
  double clutter_clearance = 40.0;  // minimum clutter distance from the signature blob
};

struct SyntheticHouse {
  data::HouseRecord record;
  std::array<imgproc::RgbImage, 4> images;  // ImageRole order
  std::array<double, 4> quality{};
};

std::vector<SyntheticHouse> generate_houses(const SyntheticConfig& cfg);

/// Writes HousesInfo.txt plus `<id>_<role>.png` for every house.
void write_dataset(const std::filesystem::path& root, std::span<const SyntheticHouse> houses);

}  // namespace houseprice::synthetic
