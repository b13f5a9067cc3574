#include "houseprice/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "houseprice/errors.hpp"

namespace houseprice::svr {

namespace {

std::span<const double> row_span(const Eigen::MatrixXd& X, Eigen::Index r, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index c = 0; c < X.cols(); ++c) buf[static_cast<std::size_t>(c)] = X(r, c);
  return buf;
}

std::string kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::histogram_intersection: return "histogram_intersection";
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
  }
  return "unknown";
}

}  // namespace

nlohmann::json KernelSpec::to_json() const {
  nlohmann::json doc{{"kind", kind_name(kind)}};
  if (kind == KernelKind::rbf) doc["gamma"] = gamma;
  return doc;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& doc) {
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "histogram_intersection") return histogram_intersection();
  if (kind == "linear") return linear();
  if (kind == "rbf") return rbf(doc.at("gamma").get<double>());
  throw DataError("unknown kernel kind '" + kind + "'");
}

double hik_kernel(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError("kernel arguments differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < 0.0 || v[i] < 0.0) {
      throw DomainError("histogram intersection kernel needs nonnegative inputs (index " + std::to_string(i) + ")");
    }
    s += std::min(u[i], v[i]);
  }
  return s;
}

double kernel(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError("kernel arguments differ in length");
  switch (spec.kind) {
    case KernelKind::histogram_intersection: return hik_kernel(u, v);
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
      return s;
    }
    case KernelKind::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d2 += (u[i] - v[i]) * (u[i] - v[i]);
      return std::exp(-spec.gamma * d2);
    }
  }
  throw ConfigError("unknown kernel");
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ri = row_span(X, i, a);
    for (Eigen::Index j = i; j < n; ++j) {
      const double k = kernel(spec, ri, row_span(X, j, b));
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

nlohmann::json SvrConfig::to_json() const {
  return {{"C", C}, {"epsilon", epsilon}, {"tolerance", tolerance}, {"max_iterations", max_iterations}};
}

SvrConfig SvrConfig::from_json(const nlohmann::json& doc) {
  SvrConfig cfg;
  cfg.C = doc.at("C").get<double>();
  cfg.epsilon = doc.at("epsilon").get<double>();
  cfg.tolerance = doc.at("tolerance").get<double>();
  cfg.max_iterations = doc.at("max_iterations").get<std::size_t>();
  return cfg;
}

void validate(const SvrConfig& cfg) {
  if (!(cfg.C > 0.0) || !std::isfinite(cfg.C)) throw ConfigError("SVR C must be > 0");
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) throw ConfigError("SVR epsilon must be >= 0");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("SVR tolerance must be > 0");
  if (cfg.max_iterations == 0) throw ConfigError("SVR max_iterations must be > 0");
}

double dual_objective(const Eigen::MatrixXd& K, std::span<const double> beta, std::span<const double> y,
                      double epsilon) {
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
  const Eigen::Map<const Eigen::VectorXd> t(y.data(), static_cast<Eigen::Index>(y.size()));
  return -0.5 * b.dot(K * b) - epsilon * b.lpNorm<1>() + t.dot(b);
}

double SvrModel::predict(std::span<const double> x) const {
  if (support_vectors.cols() > 0 && x.size() != dimension()) {
    throw DimensionError("SVR input has length " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(dimension()));
  }
  double f = bias;
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
    f += beta[static_cast<std::size_t>(i)] * svr::kernel(kernel, row_span(support_vectors, i, buf), x);
  }
  return f;
}

nlohmann::json SvrModel::to_json() const {
  nlohmann::json doc;
  doc["format"] = "houseprice.svr";
  doc["version"] = 1;
  doc["kernel"] = kernel.to_json();
  doc["config"] = config.to_json();
  doc["dimension"] = dimension();
  auto svs = nlohmann::json::array();
  std::vector<double> buf;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
    const auto r = row_span(support_vectors, i, buf);
    svs.push_back(std::vector<double>(r.begin(), r.end()));
  }
  doc["support_vectors"] = std::move(svs);
  doc["beta"] = beta;
  doc["bias"] = bias;
  doc["converged"] = converged;
  doc["iterations"] = iterations;
  doc["dual_objective"] = dual_objective;
  return doc;
}

SvrModel SvrModel::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "houseprice.svr" || doc.value("version", 0) != 1) {
    throw DataError("not a version-1 SVR model document");
  }
  SvrModel m;
  m.kernel = KernelSpec::from_json(doc.at("kernel"));
  m.config = SvrConfig::from_json(doc.at("config"));
  m.beta = doc.at("beta").get<std::vector<double>>();
  m.bias = doc.at("bias").get<double>();
  m.converged = doc.at("converged").get<bool>();
  m.iterations = doc.at("iterations").get<std::size_t>();
  m.dual_objective = doc.at("dual_objective").get<double>();
  const auto dim = doc.at("dimension").get<std::size_t>();
  const auto& svs = doc.at("support_vectors");
  if (svs.size() != m.beta.size()) throw DataError("SVR document: beta/support vector count mismatch");
  m.support_vectors.resize(static_cast<Eigen::Index>(svs.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < svs.size(); ++i) {
    const auto row = svs[i].get<std::vector<double>>();
    if (row.size() != dim) throw DataError("SVR document: support vector has wrong length");
    for (std::size_t c = 0; c < dim; ++c) m.support_vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

namespace {

// SMO over the 2n-variable form: a = [alpha; alpha*], sign s = [+1; -1],
// minimise 1/2 a'Qa + p'a  s.t.  s'a = 0, 0 <= a <= C, with
// Q_tu = s_t s_u K and p = [eps - y; eps + y].
struct SmoResult {
  std::vector<double> beta;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

SmoResult solve_smo(const Eigen::MatrixXd& K, std::span<const double> y, const SvrConfig& cfg) {
  const std::size_t n = y.size();
  const std::size_t m = 2 * n;
  const double C = cfg.C;
  constexpr double kTau = 1e-12;

  auto sign = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
  auto kidx = [n](std::size_t t) { return static_cast<Eigen::Index>(t < n ? t : t - n); };
  auto q = [&](std::size_t t, std::size_t u) { return sign(t) * sign(u) * K(kidx(t), kidx(u)); };

  std::vector<double> a(m, 0.0), p(m), G(m);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = cfg.epsilon - y[i];
    p[i + n] = cfg.epsilon + y[i];
  }
  G = p;

  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < m; ++t) f += a[t] * (G[t] + p[t]);
    return -0.5 * f;  // dual maximisation value
  };
  auto in_up = [&](std::size_t t) { return sign(t) > 0 ? a[t] < C : a[t] > 0; };
  auto in_low = [&](std::size_t t) { return sign(t) > 0 ? a[t] > 0 : a[t] < C; };

  SmoResult res;
  std::size_t iter = 0;
  for (;; ++iter) {
    if (cfg.trace_every > 0 && iter % cfg.trace_every == 0) res.trace.push_back(objective());

    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = m, j = m;
    for (std::size_t t = 0; t < m; ++t) {
      const double v = -sign(t) * G[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == m || j == m || gmax - gmin < cfg.tolerance) {
      res.converged = true;
      break;
    }
    if (iter >= cfg.max_iterations) break;

    const double old_ai = a[i];
    const double old_aj = a[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    if (sign(i) != sign(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = C - diff;
        }
      } else if (a[j] > C) {
        a[j] = C;
        a[i] = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = sum - C;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) {
          a[j] = C;
          a[i] = sum - C;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }

    const double dai = a[i] - old_ai;
    const double daj = a[j] - old_aj;
    for (std::size_t t = 0; t < m; ++t) G[t] += q(t, i) * dai + q(t, j) * daj;
  }
  if (cfg.trace_every > 0) res.trace.push_back(objective());

  res.iterations = iter;
  res.beta.resize(n);
  for (std::size_t k = 0; k < n; ++k) res.beta[k] = a[k] - a[k + n];
  return res;
}

// Bias from the KKT conditions: free vectors pin it exactly; otherwise take
// the midpoint of the interval allowed by the bounded ones. Each bound is
// kept as (g, s) meaning g + s*eps so that symmetric bounds cancel exactly.
double compute_bias(const Eigen::MatrixXd& K, std::span<const double> y, std::span<const double> beta, double C,
                    double eps) {
  const std::size_t n = y.size();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lo_g = 0, lo_s = 0, hi_g = 0, hi_s = 0;
  bool has_lo = false, has_hi = false;
  auto take_lo = [&](double g, double s) {
    if (!has_lo || g + s * eps > lo_g + lo_s * eps) {
      lo_g = g;
      lo_s = s;
      has_lo = true;
    }
  };
  auto take_hi = [&](double g, double s) {
    if (!has_hi || g + s * eps < hi_g + hi_s * eps) {
      hi_g = g;
      hi_s = s;
      has_hi = true;
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    double kb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (beta[j] != 0.0) kb += beta[j] * K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double g = y[i] - kb;
    const double b = beta[i];
    if (b > 0.0 && b < C) {
      free_sum += g - eps;
      ++free_count;
    } else if (b < 0.0 && b > -C) {
      free_sum += g + eps;
      ++free_count;
    } else if (b == 0.0) {
      take_lo(g, -1.0);
      take_hi(g, 1.0);
    } else if (b >= C) {
      take_hi(g, -1.0);
    } else {
      take_lo(g, 1.0);
    }
  }
  if (free_count > 0) return free_sum / static_cast<double>(free_count);
  if (has_lo && has_hi) return (lo_g + hi_g) / 2.0 + eps * (lo_s + hi_s) / 2.0;
  if (has_lo) return lo_g + lo_s * eps;
  return hi_g + hi_s * eps;
}

}  // namespace

SvrModel train_svr(const Eigen::MatrixXd& X, std::span<const double> y, const SvrConfig& cfg,
                   const KernelSpec& kernel_spec) {
  validate(cfg);
  if (kernel_spec.kind == KernelKind::rbf && !(kernel_spec.gamma > 0.0)) throw ConfigError("rbf gamma must be > 0");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) throw DataError("SVR training needs at least 2 samples");
  if (y.size() != n) throw DimensionError("SVR: " + std::to_string(n) + " rows but " + std::to_string(y.size()) + " targets");
  if (!X.allFinite() || !std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
    throw DataError("SVR training data contains non-finite values");
  }
  if (kernel_spec.kind == KernelKind::histogram_intersection && X.minCoeff() < 0.0) {
    throw DomainError("histogram intersection kernel needs nonnegative (normalized) inputs");
  }

  // Canonical order: lexicographic by (row, target).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const double va = X(static_cast<Eigen::Index>(a), c), vb = X(static_cast<Eigen::Index>(b), c);
      if (va != vb) return va < vb;
    }
    return y[a] < y[b];
  });
  Eigen::MatrixXd Xc(X.rows(), X.cols());
  std::vector<double> yc(n);
  for (std::size_t k = 0; k < n; ++k) {
    Xc.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(order[k]));
    yc[k] = y[order[k]];
  }

  const Eigen::MatrixXd K = gram_matrix(kernel_spec, Xc);
  SmoResult smo = solve_smo(K, yc, cfg);

  SvrModel model;
  model.kernel = kernel_spec;
  model.config = cfg;
  model.converged = smo.converged;
  model.iterations = smo.iterations;
  model.objective_trace = std::move(smo.trace);
  model.bias = compute_bias(K, yc, smo.beta, cfg.C, cfg.epsilon);
  model.dual_objective = dual_objective(K, smo.beta, yc, cfg.epsilon);

  std::vector<Eigen::Index> support;
  for (std::size_t k = 0; k < n; ++k) {
    if (smo.beta[k] != 0.0) support.push_back(static_cast<Eigen::Index>(k));
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), X.cols());
  for (std::size_t s = 0; s < support.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = Xc.row(support[s]);
    model.beta.push_back(smo.beta[static_cast<std::size_t>(support[s])]);
  }
  return model;
}

GridChoice grid_search(const Eigen::MatrixXd& X_train, std::span<const double> y_train, const Eigen::MatrixXd& X_val,
                       std::span<const double> y_val, const SvrConfig& base, const KernelSpec& kernel_spec,
                       std::span<const double> c_grid, std::span<const double> epsilon_grid) {
  if (c_grid.empty() || epsilon_grid.empty()) throw ConfigError("empty SVR hyperparameter grid");
  if (static_cast<std::size_t>(X_val.rows()) != y_val.size() || y_val.empty()) {
    throw DimensionError("SVR grid search needs a non-empty validation set");
  }
  GridChoice best;
  bool have = false;
  std::vector<double> buf;
  for (double C : c_grid) {
    for (double eps : epsilon_grid) {
      SvrConfig cfg = base;
      cfg.C = C;
      cfg.epsilon = eps;
      const SvrModel model = train_svr(X_train, y_train, cfg, kernel_spec);
      double sq = 0.0;
      for (Eigen::Index r = 0; r < X_val.rows(); ++r) {
        const double e = model.predict(row_span(X_val, r, buf)) - y_val[static_cast<std::size_t>(r)];
        sq += e * e;
      }
      const double val_mse = sq / static_cast<double>(y_val.size());
      if (!have || val_mse < best.validation_mse) {
        best = {C, eps, val_mse};
        have = true;
      }
    }
  }
  return best;
}

}  // namespace houseprice::svr
