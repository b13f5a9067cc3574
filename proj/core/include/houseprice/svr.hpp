#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

namespace houseprice::svr {

enum class KernelKind { histogram_intersection, linear, rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::histogram_intersection;
  double gamma = 1.0;  // rbf only, > 0

  static KernelSpec histogram_intersection() { return {}; }
  static KernelSpec linear() { return {KernelKind::linear, 1.0}; }
  static KernelSpec rbf(double gamma) { return {KernelKind::rbf, gamma}; }

  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& doc);
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Histogram intersection sum_i min(u_i, v_i). Inputs must be nonnegative;
/// a negative entry throws DomainError.
double hik_kernel(std::span<const double> u, std::span<const double> v);

double kernel(const KernelSpec& spec, std::span<const double> u, std::span<const double> v);

/// Gram matrix over the rows of X.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X);

struct SvrConfig {
  double C = 1.0;
  double epsilon = 0.01;
  double tolerance = 1e-3;  // stop when the maximal KKT violation drops below this
  std::size_t max_iterations = 1'000'000;
  std::size_t trace_every = 0;  // record the dual objective every k iterations (0 = off)

  nlohmann::json to_json() const;
  static SvrConfig from_json(const nlohmann::json& doc);
};

void validate(const SvrConfig& cfg);

/// f(x) = sum_i beta_i K(sv_i, x) + bias, with beta_i = alpha_i - alpha_i*.
struct SvrModel {
  KernelSpec kernel;
  Eigen::MatrixXd support_vectors;  // one row per support vector
  std::vector<double> beta;
  double bias = 0.0;
  SvrConfig config;
  bool converged = false;
  std::size_t iterations = 0;
  double dual_objective = 0.0;          // -1/2 b'Kb - eps |b|_1 + y'b at the returned solution
  std::vector<double> objective_trace;  // sampled every config.trace_every iterations

  std::size_t dimension() const { return static_cast<std::size_t>(support_vectors.cols()); }
  double predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static SvrModel from_json(const nlohmann::json& doc);
};

/// Trains an epsilon-SVR on the rows of X. Rows are processed in a canonical
/// (lexicographic) order, so the model does not depend on input row order.
/// Hitting max_iterations returns the current model with converged == false.
SvrModel train_svr(const Eigen::MatrixXd& X, std::span<const double> y, const SvrConfig& cfg,
                   const KernelSpec& kernel = KernelSpec::histogram_intersection());

inline double predict_svr(const SvrModel& model, std::span<const double> x) { return model.predict(x); }

/// Dual objective -1/2 b'Kb - eps sum|b_i| + y'b.
double dual_objective(const Eigen::MatrixXd& K, std::span<const double> beta, std::span<const double> y,
                      double epsilon);

inline const std::vector<double> kDefaultCGrid{0.1, 1.0, 10.0, 100.0, 1000.0};
inline const std::vector<double> kDefaultEpsilonGrid{0.001, 0.01, 0.05};

struct GridChoice {
  double C = 1.0;
  double epsilon = 0.01;
  double validation_mse = 0.0;
};

/// Picks (C, epsilon) with the lowest validation MSE; ties keep the earlier
/// grid entry (C-major order).
GridChoice grid_search(const Eigen::MatrixXd& X_train, std::span<const double> y_train, const Eigen::MatrixXd& X_val,
                       std::span<const double> y_val, const SvrConfig& base, const KernelSpec& kernel,
                       std::span<const double> c_grid = kDefaultCGrid,
                       std::span<const double> epsilon_grid = kDefaultEpsilonGrid);

}  // namespace houseprice::svr
