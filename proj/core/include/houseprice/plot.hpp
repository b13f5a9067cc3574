#pragma once

#include <string>
#include <utility>
#include <vector>

namespace houseprice::plot {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), drawn in order
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

/// Standalone SVG line chart with linear axes, ticks and a legend.
std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace houseprice::plot
