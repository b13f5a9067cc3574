#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "houseprice/image.hpp"

namespace houseprice::imgproc {

/// Decodes any format OpenCV's imgcodecs understands (JPEG, PNG, PGM, ...).
/// Throws DataError naming the file when it cannot be read or decoded.
RgbImage read_rgb(const std::filesystem::path& path);

/// Encoding is chosen from the file extension.
void write_rgb(const std::filesystem::path& path, const RgbImage& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace houseprice::imgproc
