#include "houseprice/image_io.hpp"

#include <fstream>
#include <iterator>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "houseprice/errors.hpp"

namespace houseprice::imgproc {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbImage read_rgb(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  cv::Mat decoded;
  if (!bytes.empty()) {
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
  }
  if (decoded.empty() || decoded.cols < 1 || decoded.rows < 1) {
    throw DataError("cannot decode image " + path.string());
  }
  std::vector<Rgb> pixels;
  pixels.reserve(static_cast<std::size_t>(decoded.cols) * decoded.rows);
  for (int y = 0; y < decoded.rows; ++y) {
    const auto* row = decoded.ptr<cv::Vec3b>(y);
    for (int x = 0; x < decoded.cols; ++x) pixels.push_back({row[x][2], row[x][1], row[x][0]});  // BGR
  }
  return RgbImage(decoded.cols, decoded.rows, std::move(pixels));
}

void write_rgb(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb& p = image.at(x, y);
      row[x] = cv::Vec3b(p.b, p.g, p.r);
    }
  }
  if (!cv::imwrite(path.string(), mat)) throw DataError("cannot write image " + path.string());
}

}  // namespace houseprice::imgproc
