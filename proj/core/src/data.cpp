#include "houseprice/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "houseprice/errors.hpp"

namespace houseprice::data {

namespace fs = std::filesystem;

std::string_view to_string(ImageRole role) {
  switch (role) {
    case ImageRole::frontal: return "frontal";
    case ImageRole::bedroom: return "bedroom";
    case ImageRole::kitchen: return "kitchen";
    case ImageRole::bathroom: return "bathroom";
  }
  return "unknown";
}

std::optional<ImageRole> parse_role(std::string_view name) {
  for (ImageRole role : kImageRoles) {
    if (to_string(role) == name) return role;
  }
  return std::nullopt;
}

void validate(const HouseRecord& house) {
  const std::string who = "house " + std::to_string(house.id);
  if (!(house.price > 0.0) || !std::isfinite(house.price)) throw DataError(who + ": price must be > 0");
  if (!(house.area > 0.0) || !std::isfinite(house.area)) throw DataError(who + ": area must be > 0");
  if (house.bedrooms < 1) throw DataError(who + ": bedrooms must be >= 1");
  if (!(house.bathrooms >= 1.0) || !std::isfinite(house.bathrooms)) throw DataError(who + ": bathrooms must be >= 1");
  for (ImageRole role : kImageRoles) {
    if (house.image(role).empty()) {
      throw DataError(who + ": missing " + std::string(to_string(role)) + " image");
    }
  }
}

namespace {

bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  // from_chars for double is available in libstdc++ 11
  const char* first = token.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<HouseRecord> load_houses_dataset(const fs::path& root, std::string_view attributes_file) {
  const fs::path info = root / fs::path(attributes_file);
  std::ifstream in(info);
  if (!in) throw DataError("cannot open attribute file " + info.string());

  std::vector<HouseRecord> houses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    double v[5];
    bool ok = tokens.size() == 5;
    for (std::size_t i = 0; ok && i < 5; ++i) ok = parse_double(tokens[i], v[i]) && std::isfinite(v[i]);
    if (!ok) {
      throw DataError(info.string() + ":" + std::to_string(line_no) +
                      ": expected 5 numeric fields (bedrooms bathrooms area zipcode price)");
    }
    HouseRecord h;
    h.id = static_cast<int>(houses.size()) + 1;
    h.bedrooms = static_cast<int>(v[0]);
    if (h.bedrooms != v[0]) throw DataError(info.string() + ":" + std::to_string(line_no) + ": fractional bedrooms");
    h.bathrooms = v[1];
    h.area = v[2];
    h.zipcode = static_cast<std::int64_t>(v[3]);
    h.price = v[4];
    houses.push_back(h);
  }

  static const std::regex kImageName(R"(^(\d+)_(frontal|bedroom|kitchen|bathroom)\.[A-Za-z0-9]+$)");
  std::map<std::pair<int, ImageRole>, fs::path> images;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, kImageName)) continue;
    const int id = std::stoi(m[1].str());
    const ImageRole role = *parse_role(m[2].str());
    const auto [it, inserted] = images.emplace(std::pair{id, role}, entry.path());
    if (!inserted) {
      // Two files for one (id, role); pick neither rather than guess.
      std::string a = it->second.filename().string();
      std::string b = name;
      if (b < a) std::swap(a, b);
      throw DataError("duplicate image for house " + std::to_string(id) + " role " +
                      std::string(to_string(role)) + ": " + a + " and " + b);
    }
  }

  for (HouseRecord& h : houses) {
    for (ImageRole role : kImageRoles) {
      const auto it = images.find({h.id, role});
      if (it == images.end()) {
        throw DataError("house " + std::to_string(h.id) + " is missing its " + std::string(to_string(role)) +
                        " image in " + root.string());
      }
      h.image_paths[static_cast<std::size_t>(role)] = it->second;
    }
    validate(h);
  }
  return houses;
}

DatasetStats describe(const std::vector<HouseRecord>& houses) {
  DatasetStats s;
  s.count = houses.size();
  if (houses.empty()) return s;
  s.price_min = s.price_max = houses.front().price;
  s.area_min = s.area_max = houses.front().area;
  for (const auto& h : houses) {
    s.price_mean += h.price;
    s.area_mean += h.area;
    s.bedrooms_mean += h.bedrooms;
    s.bathrooms_mean += h.bathrooms;
    s.price_min = std::min(s.price_min, h.price);
    s.price_max = std::max(s.price_max, h.price);
    s.area_min = std::min(s.area_min, h.area);
    s.area_max = std::max(s.area_max, h.area);
  }
  const double n = static_cast<double>(houses.size());
  s.price_mean /= n;
  s.area_mean /= n;
  s.bedrooms_mean /= n;
  s.bathrooms_mean /= n;
  return s;
}

TabularDataset load_tabular_csv(const fs::path& path, std::string_view target_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::vector<std::vector<std::string>> lines;
  std::vector<int> line_numbers;
  std::string line;
  int line_no = 0;
  std::optional<bool> comma;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!comma) comma = line.find(',') != std::string::npos;
    lines.push_back(*comma ? split_commas(line) : split_whitespace(line));
    line_numbers.push_back(line_no);
  }
  if (lines.empty()) throw DataError(path.string() + ": no data");

  TabularDataset ds;
  ds.provenance = path.string();
  std::vector<std::string> header;
  double probe = 0.0;
  const bool has_header = std::any_of(lines.front().begin(), lines.front().end(),
                                      [&](const std::string& t) { return !t.empty() && !parse_double(t, probe); });
  std::size_t first_row = 0;
  const std::size_t columns = lines.front().size();
  if (has_header) {
    header = lines.front();
    first_row = 1;
  } else {
    for (std::size_t c = 0; c < columns; ++c) header.push_back("x" + std::to_string(c));
  }
  if (columns < 2) throw DataError(path.string() + ": need at least one feature and one target column");

  std::size_t target = columns - 1;
  if (!target_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), target_column);
    if (it != header.end()) {
      target = static_cast<std::size_t>(it - header.begin());
    } else {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(target_column.data(), target_column.data() + target_column.size(), idx);
      if (ec != std::errc() || ptr != target_column.data() + target_column.size() || idx >= columns) {
        throw ConfigError(path.string() + ": unknown target column '" + std::string(target_column) + "'");
      }
      target = idx;
    }
  }
  ds.target_name = header[target];
  for (std::size_t c = 0; c < columns; ++c) {
    if (c != target) ds.feature_names.push_back(header[c]);
  }

  for (std::size_t r = first_row; r < lines.size(); ++r) {
    const auto& cells = lines[r];
    const std::string where = path.string() + ":" + std::to_string(line_numbers[r]);
    if (cells.size() != columns) {
      throw DataError(where + ": expected " + std::to_string(columns) + " columns, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(columns - 1);
    for (std::size_t c = 0; c < columns; ++c) {
      double v = 0.0;
      if (cells[c].empty() || !parse_double(cells[c], v) || !std::isfinite(v)) {
        throw DataError(where + ": missing or non-numeric value in row " + std::to_string(r - first_row + 1) +
                        ", column " + std::to_string(c + 1) + " (" + header[c] + ")");
      }
      if (c == target) {
        ds.targets.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& fractions) {
  if (fractions.size() < 2) throw ConfigError("a split needs at least two parts");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be > 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  if (n < fractions.size()) throw ConfigError("cannot split " + std::to_string(n) + " samples into " +
                                              std::to_string(fractions.size()) + " non-empty parts");

  std::vector<std::size_t> sizes(fractions.size());
  std::vector<double> remainders(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % order.size()]];

  for (std::size_t s : sizes) {
    if (s == 0) throw ConfigError("split of " + std::to_string(n) + " samples leaves an empty part");
  }
  return sizes;
}

std::vector<std::vector<std::size_t>> split(std::size_t n, const SplitSpec& spec) {
  const auto sizes = split_sizes(n, spec.fractions);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::vector<std::size_t>> parts;
  auto it = perm.begin();
  for (std::size_t s : sizes) {
    parts.emplace_back(it, it + static_cast<std::ptrdiff_t>(s));
    it += static_cast<std::ptrdiff_t>(s);
  }
  return parts;
}

}  // namespace houseprice::data
