#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>

namespace houseprice::metrics {

enum class Scale { normalized, usd };

std::string_view to_string(Scale scale);

/// Mean squared error (1/n) sum (yhat - y)^2. Throws on empty or mismatched input.
double mse(std::span<const double> yhat, std::span<const double> y);

/// Sum of squared errors.
double sse(std::span<const double> yhat, std::span<const double> y);

/// Total sum of squares around the mean of y.
double sst(std::span<const double> y);

/// Coefficient of determination 1 - SSE/SST. Negative for models worse than
/// the mean. Throws UndefinedError when SST == 0.
double r_squared(std::span<const double> yhat, std::span<const double> y);

/// Pearson correlation between predictions and targets. Throws
/// UndefinedError when either series has zero variance.
double r_value(std::span<const double> yhat, std::span<const double> y);

struct EvalReport {
  double mse = 0.0;
  double sse = 0.0;
  double sst = 0.0;
  std::optional<double> r_squared;  // empty when SST == 0
  std::optional<double> r_value;    // empty when either series is constant
  std::size_t n = 0;
  Scale scale = Scale::normalized;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& doc);

  static std::string csv_header();
  std::string csv_row() const;
};

/// Computes every metric; undefined correlation quantities are left empty
/// instead of throwing.
EvalReport evaluate(std::span<const double> yhat, std::span<const double> y, Scale scale);

}  // namespace houseprice::metrics
