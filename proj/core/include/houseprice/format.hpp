#pragma once

#include <string>

namespace houseprice {

/// Shortest decimal text that parses back to exactly `v` (CSV cells).
std::string format_double(double v);

/// Parses a CSV cell written by format_double; empty text is an error.
double parse_double_cell(const std::string& text);

}  // namespace houseprice
