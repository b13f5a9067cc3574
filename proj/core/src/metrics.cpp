#include "houseprice/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "houseprice/errors.hpp"
#include "houseprice/format.hpp"

namespace houseprice::metrics {

namespace {

void check_pair(std::span<const double> yhat, std::span<const double> y) {
  if (yhat.size() != y.size()) {
    throw DimensionError("prediction/target length mismatch: " + std::to_string(yhat.size()) + " vs " +
                         std::to_string(y.size()));
  }
  if (y.empty()) throw DimensionError("metrics need at least one sample");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(Scale scale) { return scale == Scale::usd ? "usd" : "normalized"; }

double sse(std::span<const double> yhat, std::span<const double> y) {
  check_pair(yhat, y);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = yhat[i] - y[i];
    s += e * e;
  }
  return s;
}

double mse(std::span<const double> yhat, std::span<const double> y) {
  return sse(yhat, y) / static_cast<double>(y.size());
}

double sst(std::span<const double> y) {
  if (y.empty()) throw DimensionError("metrics need at least one sample");
  const double m = mean(y);
  double s = 0.0;
  for (double v : y) s += (m - v) * (m - v);
  return s;
}

double r_squared(std::span<const double> yhat, std::span<const double> y) {
  check_pair(yhat, y);
  const double total = sst(y);
  if (!(total > 0.0)) throw UndefinedError("R^2 is undefined when all targets are equal (SST = 0)");
  return 1.0 - sse(yhat, y) / total;
}

double r_value(std::span<const double> yhat, std::span<const double> y) {
  check_pair(yhat, y);
  const double mp = mean(yhat);
  const double mt = mean(y);
  double cov = 0.0, vp = 0.0, vt = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = yhat[i] - mp;
    const double b = y[i] - mt;
    cov += a * b;
    vp += a * a;
    vt += b * b;
  }
  if (!(vp > 0.0) || !(vt > 0.0)) throw UndefinedError("R-value is undefined for a constant series");
  return std::clamp(cov / std::sqrt(vp * vt), -1.0, 1.0);
}

EvalReport evaluate(std::span<const double> yhat, std::span<const double> y, Scale scale) {
  check_pair(yhat, y);
  EvalReport rep;
  rep.n = y.size();
  rep.scale = scale;
  rep.sse = sse(yhat, y);
  rep.sst = sst(y);
  rep.mse = rep.sse / static_cast<double>(rep.n);
  if (rep.sst > 0.0) rep.r_squared = 1.0 - rep.sse / rep.sst;
  try {
    rep.r_value = r_value(yhat, y);
  } catch (const UndefinedError&) {
  }
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json doc;
  doc["scale"] = std::string(to_string(scale));
  doc["n"] = n;
  doc["mse"] = mse;
  doc["sse"] = sse;
  doc["sst"] = sst;
  doc["r_squared"] = r_squared ? nlohmann::json(*r_squared) : nlohmann::json(nullptr);
  doc["r_value"] = r_value ? nlohmann::json(*r_value) : nlohmann::json(nullptr);
  return doc;
}

EvalReport EvalReport::from_json(const nlohmann::json& doc) {
  EvalReport rep;
  rep.scale = doc.at("scale").get<std::string>() == "usd" ? Scale::usd : Scale::normalized;
  rep.n = doc.at("n").get<std::size_t>();
  rep.mse = doc.at("mse").get<double>();
  rep.sse = doc.at("sse").get<double>();
  rep.sst = doc.at("sst").get<double>();
  if (!doc.at("r_squared").is_null()) rep.r_squared = doc.at("r_squared").get<double>();
  if (!doc.at("r_value").is_null()) rep.r_value = doc.at("r_value").get<double>();
  return rep;
}

std::string EvalReport::csv_header() { return "scale,n,mse,sse,sst,r_squared,r_value"; }

std::string EvalReport::csv_row() const {
  std::ostringstream out;
  out << to_string(scale) << ',' << n << ',' << format_double(mse) << ',' << format_double(sse) << ','
      << format_double(sst) << ',' << (r_squared ? format_double(*r_squared) : "") << ','
      << (r_value ? format_double(*r_value) : "");
  return out.str();
}

}  // namespace houseprice::metrics
