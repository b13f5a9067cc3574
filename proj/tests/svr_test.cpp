#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <numeric>
#include <random>

#include "houseprice/errors.hpp"
#include "houseprice/metrics.hpp"
#include "houseprice/svr.hpp"
#include "oracles.hpp"

using namespace houseprice;
using svr::KernelSpec;
using svr::SvrConfig;

namespace {

Eigen::MatrixXd random_unit(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  return X;
}

std::vector<double> to_vec(const Eigen::RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

// beta of training row r, 0 when it is not a support vector.
double beta_of(const svr::SvrModel& m, const Eigen::RowVectorXd& x) {
  for (Eigen::Index s = 0; s < m.support_vectors.rows(); ++s)
    if (m.support_vectors.row(s) == x) return m.beta[static_cast<std::size_t>(s)];
  return 0.0;
}

void expect_kkt(const svr::SvrModel& m, const Eigen::MatrixXd& X, std::span<const double> y) {
  const double C = m.config.C, eps = m.config.epsilon, tol = m.config.tolerance;
  double sum = 0.0;
  for (double b : m.beta) {
    sum += b;
    EXPECT_LE(std::abs(b), C + 1e-12);
    EXPECT_NE(b, 0.0);
  }
  EXPECT_LE(std::abs(sum), 1e-9 * C * static_cast<double>(y.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double b = beta_of(m, X.row(i));
    const double dev = std::abs(m.predict(to_vec(X.row(i))) - y[static_cast<std::size_t>(i)]);
    if (b == 0.0) {
      EXPECT_LE(dev, eps + tol) << "row " << i;
    } else if (std::abs(b) >= C) {
      EXPECT_GE(dev, eps - tol) << "row " << i;
    } else {
      EXPECT_GE(dev, eps - tol) << "row " << i;
      EXPECT_LE(dev, eps + tol) << "row " << i;
    }
  }
}

}  // namespace

TEST(Hik, HandCases) {
  const std::vector<double> x{0.2, 0.5, 0.3};
  EXPECT_DOUBLE_EQ(svr::hik_kernel(x, x), 1.0);
  const std::vector<double> a{1, 0}, b{0, 1};
  EXPECT_EQ(svr::hik_kernel(a, b), 0.0);
  const std::vector<double> neg{-0.1, 0.3};
  EXPECT_THROW(svr::hik_kernel(neg, a), DomainError);
  const std::vector<double> short_vec{1};
  EXPECT_THROW(svr::hik_kernel(short_vec, a), DimensionError);
}

TEST(Hik, GramIsPositiveSemidefinite) {
  const auto X = random_unit(200, 12, 4);
  const auto K = svr::gram_matrix(KernelSpec::histogram_intersection(), X);
  EXPECT_TRUE(K.isApprox(K.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(Svr, ConstantTargetStaysInTube) {
  const auto X = random_unit(20, 3, 1);
  const std::vector<double> y(20, 0.42);
  SvrConfig cfg;
  cfg.epsilon = 0.01;
  const auto m = svr::train_svr(X, y, cfg);
  EXPECT_TRUE(m.converged);
  EXPECT_TRUE(m.beta.empty());
  EXPECT_EQ(m.bias, 0.42);
  EXPECT_EQ(m.predict(to_vec(X.row(3))), 0.42);
}

TEST(Svr, LinearTargetLinearKernel) {
  const auto X = random_unit(30, 3, 2);
  std::vector<double> y(30);
  for (int i = 0; i < 30; ++i) y[i] = X.row(i).sum();
  SvrConfig cfg;
  cfg.C = 10;
  cfg.epsilon = 0.01;
  const auto m = svr::train_svr(X, y, cfg, KernelSpec::linear());
  const auto T = random_unit(50, 3, 3);
  std::vector<double> pred, truth;
  for (int i = 0; i < 50; ++i) {
    pred.push_back(m.predict(to_vec(T.row(i))));
    truth.push_back(T.row(i).sum());
  }
  EXPECT_GT(metrics::r_squared(pred, truth), 0.99);
}

TEST(Svr, ToyDualMatchesBruteForceQp) {
  for (const auto& kernel : {KernelSpec::histogram_intersection(), KernelSpec::linear(), KernelSpec::rbf(2.0)}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto X = random_unit(6, 2, 10 + seed);
      std::vector<double> y(6);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0, 1);
      for (auto& v : y) v = u(rng);
      SvrConfig cfg;
      cfg.C = 1.0;
      cfg.epsilon = 0.05;
      cfg.tolerance = 1e-10;
      const auto m = svr::train_svr(X, y, cfg, kernel);
      ASSERT_TRUE(m.converged);
      const auto K = svr::gram_matrix(kernel, X);
      const auto qp = oracle::brute_force_svr_dual(K, y, cfg.C, cfg.epsilon);
      EXPECT_NEAR(m.dual_objective, qp.objective, 1e-6);

      // Same predictions on the training points: the QP's f from its beta and
      // the model's bias (the bias is not part of the dual).
      for (int i = 0; i < 6; ++i) {
        double f = m.bias;
        for (int j = 0; j < 6; ++j) f += qp.beta[j] * K(i, j);
        EXPECT_NEAR(m.predict(to_vec(X.row(i))), f, 1e-5);
      }
    }
  }
}

TEST(Svr, KktCertificate) {
  for (const auto& kernel : {KernelSpec::histogram_intersection(), KernelSpec::rbf(1.0)}) {
    const auto X = random_unit(80, 4, 21);
    std::vector<double> y(80);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 0.05);
    for (int i = 0; i < 80; ++i) y[i] = 0.3 * X(i, 0) + 0.5 * X(i, 1) * X(i, 2) + g(rng);
    for (double C : {0.1, 10.0}) {
      SvrConfig cfg;
      cfg.C = C;
      cfg.epsilon = 0.02;
      const auto m = svr::train_svr(X, y, cfg, kernel);
      ASSERT_TRUE(m.converged);
      expect_kkt(m, X, y);
    }
  }
}

TEST(Svr, DualObjectiveNonDecreasing) {
  const auto X = random_unit(60, 3, 5);
  std::vector<double> y(60);
  for (int i = 0; i < 60; ++i) y[i] = std::sin(3 * X(i, 0)) * X(i, 1);
  SvrConfig cfg;
  cfg.C = 5;
  cfg.trace_every = 3;
  const auto m = svr::train_svr(X, y, cfg);
  ASSERT_GT(m.objective_trace.size(), 3u);
  for (std::size_t k = 1; k < m.objective_trace.size(); ++k)
    EXPECT_GE(m.objective_trace[k], m.objective_trace[k - 1] - 1e-12);
}

TEST(Svr, RowOrderInvariance) {
  const auto X = random_unit(50, 3, 6);
  std::vector<double> y(50);
  for (int i = 0; i < 50; ++i) y[i] = X(i, 0) * X(i, 0) + 0.2 * X(i, 2);
  std::vector<int> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  Eigen::MatrixXd Xp(50, 3);
  std::vector<double> yp(50);
  for (int i = 0; i < 50; ++i) Xp.row(i) = X.row(perm[i]), yp[i] = y[perm[i]];
  SvrConfig cfg;
  cfg.C = 10;
  const auto a = svr::train_svr(X, y, cfg);
  const auto b = svr::train_svr(Xp, yp, cfg);
  const auto probe = random_unit(20, 3, 7);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(a.predict(to_vec(probe.row(i))), b.predict(to_vec(probe.row(i))), 1e-6);
}

TEST(Svr, ZeroSupportVectorsPredictBias) {
  svr::SvrModel m;
  m.support_vectors.resize(0, 2);
  m.bias = 0.3;
  const std::vector<double> x{0.1, 0.9};
  EXPECT_EQ(m.predict(x), 0.3);
  const std::vector<double> wrong{0.1};
  EXPECT_THROW(m.predict(wrong), DimensionError);
}

TEST(Svr, IterationCapFlagged) {
  const auto X = random_unit(40, 3, 12);
  std::vector<double> y(40);
  for (int i = 0; i < 40; ++i) y[i] = X(i, 1);
  SvrConfig cfg;
  cfg.C = 100;
  cfg.max_iterations = 2;
  EXPECT_FALSE(svr::train_svr(X, y, cfg).converged);
}

TEST(Svr, InputErrors) {
  const auto X = random_unit(5, 2, 1);
  const std::vector<double> y(5, 0.1);
  SvrConfig cfg;
  auto bad = X;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(svr::train_svr(bad, y, cfg), DataError);
  bad(0, 0) = -0.5;
  EXPECT_THROW(svr::train_svr(bad, y, cfg), DomainError);
  EXPECT_THROW(svr::train_svr(X.topRows(1), std::span(y).first(1), cfg), DataError);
  cfg.C = 0;
  EXPECT_THROW(svr::train_svr(X, y, cfg), ConfigError);
}

TEST(Svr, JsonRoundTrip) {
  const auto X = random_unit(25, 3, 13);
  std::vector<double> y(25);
  for (int i = 0; i < 25; ++i) y[i] = X(i, 2);
  const auto m = svr::train_svr(X, y, SvrConfig{});
  const auto back = svr::SvrModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.beta, m.beta);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.support_vectors, m.support_vectors);
  EXPECT_EQ(back.kernel, m.kernel);
  EXPECT_EQ(back.predict(to_vec(X.row(0))), m.predict(to_vec(X.row(0))));
}

TEST(Svr, GridSearchPicksBestValidation) {
  const auto X = random_unit(60, 2, 14);
  std::vector<double> y(60);
  for (int i = 0; i < 60; ++i) y[i] = 0.5 * X(i, 0) + 0.4 * X(i, 1);
  const std::vector<double> cs{0.1, 10.0};
  const std::vector<double> es{0.01};
  const auto choice = svr::grid_search(X.topRows(45), std::span(y).first(45), X.bottomRows(15),
                                       std::span(y).subspan(45), SvrConfig{}, KernelSpec::linear(), cs, es);
  for (double C : cs) {
    SvrConfig cfg;
    cfg.C = C;
    cfg.epsilon = 0.01;
    const auto m = svr::train_svr(X.topRows(45), std::span(y).first(45), cfg, KernelSpec::linear());
    std::vector<double> pred;
    for (int i = 45; i < 60; ++i) pred.push_back(m.predict(to_vec(X.row(i))));
    EXPECT_LE(choice.validation_mse, metrics::mse(pred, std::span(y).subspan(45)) + 1e-15);
  }
}
