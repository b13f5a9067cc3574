#include <gtest/gtest.h>

#include <random>

#include "houseprice/errors.hpp"
#include "houseprice/mlp.hpp"
#include "oracles.hpp"

using namespace houseprice;
using mlp::LmConfig;
using mlp::MlpModel;
using mlp::Samples;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  return X;
}

Samples xor_samples() {
  Samples s;
  s.X.resize(4, 2);
  s.X << 0, 0, 0, 1, 1, 0, 1, 1;
  s.y = {0.1, 0.9, 0.9, 0.1};
  return s;
}

double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max(1.0, std::abs(b.data()[i]));
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST(Init, ShapesAndCounts) {
  const auto m = mlp::init_network(4, 1);
  EXPECT_EQ(m.hidden_weights.rows(), 4);
  EXPECT_EQ(m.hidden_weights.cols(), 4);
  EXPECT_EQ(m.parameter_count(), 25u);
  EXPECT_EQ(mlp::init_network(260, 1).parameter_count(), 1049u);
  EXPECT_EQ(m.layer_sizes(), (std::vector<std::size_t>{4, 4, 1}));
  EXPECT_THROW(mlp::init_network(0, 1), ConfigError);
}

TEST(Init, DeterministicAndBounded) {
  const auto a = mlp::init_network(7, 42), b = mlp::init_network(7, 42), c = mlp::init_network(7, 43);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
  const double r1 = std::sqrt(6.0 / (7 + 4)), r2 = std::sqrt(6.0 / (4 + 1));
  EXPECT_LE(a.hidden_weights.cwiseAbs().maxCoeff(), r1);
  EXPECT_LE(a.hidden_bias.cwiseAbs().maxCoeff(), r1);
  EXPECT_LE(a.output_weights.cwiseAbs().maxCoeff(), r2);
  EXPECT_LE(std::abs(a.output_bias), r2);
}

TEST(Forward, ZeroWeightsGiveHalf) {
  auto m = mlp::init_network(3, 0);
  m.set_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.parameter_count())));
  const std::vector<double> x{0.3, 0.1, 0.8};
  EXPECT_EQ(mlp::forward(m, x), 0.5);
}

TEST(Forward, SigmoidLimits) {
  EXPECT_EQ(mlp::sigmoid(0.0), 0.5);
  EXPECT_NEAR(mlp::sigmoid(50.0), 1.0, 1e-15);
  EXPECT_NEAR(mlp::sigmoid(-50.0), 0.0, 1e-15);
}

TEST(Forward, MatchesNaiveEvaluation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = mlp::init_network(5, seed);
    const auto X = random_matrix(8, 5, seed + 100);
    const auto batch = mlp::forward_rows(m, X);
    for (int i = 0; i < 8; ++i) {
      const Eigen::RowVectorXd r = X.row(i);
      const std::vector<double> x(r.data(), r.data() + 5);
      EXPECT_NEAR(mlp::forward(m, x), oracle::naive_forward(m, x), 1e-12);
      EXPECT_NEAR(batch[i], oracle::naive_forward(m, x), 1e-12);
      const double out = mlp::predict_mlp(m, x);
      EXPECT_GT(out, 0.0);
      EXPECT_LT(out, 1.0);
    }
  }
  const auto m = mlp::init_network(5, 0);
  const std::vector<double> wrong{1, 2};
  EXPECT_THROW(mlp::forward(m, wrong), DimensionError);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  const int shapes[][2] = {{10, 3}, {1, 1}, {4, 2}, {7, 6}, {15, 4}, {3, 9}, {20, 1}, {5, 12}, {12, 5}, {2, 16},
                           {9, 3},  {6, 7}, {8, 8}, {11, 2}, {1, 20}, {14, 3}, {4, 10}, {13, 6}, {16, 2}, {3, 3}};
  std::uint64_t seed = 0;
  for (auto [rows, cols] : shapes) {
    for (auto act : {mlp::OutputActivation::sigmoid, mlp::OutputActivation::linear}) {
      const auto m = mlp::init_network(static_cast<std::size_t>(cols), ++seed, act);
      const auto X = random_matrix(rows, cols, seed + 1000);
      std::vector<double> y(static_cast<std::size_t>(rows));
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = 0.05 * static_cast<double>(k % 19);
      const auto rj = mlp::residual_jacobian(m, X, y);
      const auto fd = oracle::finite_difference_jacobian(m, X, y);
      EXPECT_LT(max_relative_error(rj.jacobian, fd), 1e-4) << rows << "x" << cols;
      for (int k = 0; k < rows; ++k) {
        const Eigen::RowVectorXd r = X.row(k);
        EXPECT_NEAR(rj.residuals[k], mlp::forward(m, std::vector<double>(r.data(), r.data() + cols)) - y[k], 1e-15);
      }
    }
  }
}

TEST(Jacobian, OutputBiasColumnForZeroHiddenWeights) {
  auto m = mlp::init_network(3, 5);
  m.hidden_weights.setZero();
  m.hidden_bias.setZero();
  Eigen::MatrixXd X(1, 3);
  X << 0.2, 0.4, 0.6;
  const std::vector<double> y{0.3};
  const auto rj = mlp::residual_jacobian(m, X, y);
  const double pre = 0.5 * m.output_weights.sum() + m.output_bias;
  const double s = mlp::sigmoid(pre);
  EXPECT_NEAR(rj.jacobian(0, rj.jacobian.cols() - 1), s * (1 - s), 1e-15);
}

TEST(Jacobian, DuplicatedRowsBitIdentical) {
  const auto m = mlp::init_network(4, 8);
  Eigen::MatrixXd X = random_matrix(3, 4, 9);
  X.row(2) = X.row(0);
  const std::vector<double> y{0.2, 0.5, 0.2};
  const auto rj = mlp::residual_jacobian(m, X, y);
  EXPECT_EQ(rj.jacobian.row(0), rj.jacobian.row(2));
}

TEST(EarlyStopper, PatienceTwo) {
  mlp::EarlyStopper s(2);
  EXPECT_FALSE(s.update(0.5));
  EXPECT_FALSE(s.update(0.4));
  EXPECT_FALSE(s.update(0.41));
  EXPECT_TRUE(s.update(0.42));
  EXPECT_EQ(s.best_epoch(), 2u);
  EXPECT_EQ(s.best_value(), 0.4);
}

TEST(EarlyStopper, IncreaseRunResetsOnDecrease) {
  mlp::EarlyStopper s(2);
  s.update(0.5);
  s.update(0.6);
  EXPECT_FALSE(s.update(0.55));
  EXPECT_FALSE(s.update(0.58));
  EXPECT_TRUE(s.update(0.59));
  EXPECT_EQ(s.best_epoch(), 1u);
}

TEST(Lm, FitsIdentity) {
  Samples s;
  s.X.resize(20, 1);
  for (int i = 0; i < 20; ++i) {
    s.X(i, 0) = 0.1 + 0.8 * i / 19.0;
    s.y.push_back(s.X(i, 0));
  }
  LmConfig cfg;
  cfg.max_epochs = 50;
  cfg.patience = 50;
  const auto r = mlp::train_lm(mlp::init_network(1, 3), s, s, cfg);
  ASSERT_LE(r.history.epochs.size(), 50u);
  EXPECT_LT(r.history.epochs.back().train_mse, 1e-4);
}

TEST(Lm, XorOnMostSeeds) {
  const auto s = xor_samples();
  LmConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  int solved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = mlp::train_lm(mlp::init_network(2, seed), s, s, cfg);
    double best = 1.0;
    for (const auto& e : r.history.epochs) best = std::min(best, e.train_mse);
    if (best < 1e-3) ++solved;
  }
  EXPECT_GE(solved, 8);
}

TEST(Lm, AcceptedStepsStrictlyDecreaseSse) {
  Samples train, val;
  train.X = random_matrix(40, 3, 1);
  val.X = random_matrix(10, 3, 2);
  for (int i = 0; i < 40; ++i) train.y.push_back(0.2 + 0.6 * train.X(i, 0) * train.X(i, 1));
  for (int i = 0; i < 10; ++i) val.y.push_back(0.2 + 0.6 * val.X(i, 0) * val.X(i, 1));
  for (auto damping : {mlp::Damping::marquardt, mlp::Damping::identity}) {
    LmConfig cfg;
    cfg.max_epochs = 100;
    cfg.patience = 100;
    cfg.damping = damping;
    const auto r = mlp::train_lm(mlp::init_network(3, 4), train, val, cfg);
    const double initial = [&] {
      const auto m = mlp::init_network(3, 4);
      const auto p = mlp::forward_rows(m, train.X);
      double s = 0;
      for (int i = 0; i < 40; ++i) s += (p[i] - train.y[i]) * (p[i] - train.y[i]);
      return s / 40;
    }();
    double prev = initial;
    int accepted = 0;
    for (const auto& e : r.history.epochs) {
      if (e.accepted) {
        EXPECT_LT(e.train_mse, prev);
        ++accepted;
      } else {
        EXPECT_EQ(e.train_mse, prev);
      }
      prev = e.train_mse;
    }
    EXPECT_GT(accepted, 10);
  }
}

TEST(Lm, ReturnsBestValidationEpoch) {
  // Few noisy training points and a disjoint validation set overfit quickly.
  Samples train, val;
  train.X = random_matrix(12, 6, 3);
  val.X = random_matrix(30, 6, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int i = 0; i < 12; ++i) train.y.push_back(u(rng));
  for (int i = 0; i < 30; ++i) val.y.push_back(u(rng));
  LmConfig cfg;
  cfg.patience = 3;
  cfg.max_epochs = 300;
  const auto r = mlp::train_lm(mlp::init_network(6, 6), train, val, cfg);
  const auto& h = r.history;
  ASSERT_GE(h.best_epoch, 1u);
  double min_val = 1e9;
  std::size_t argmin = 0;
  for (const auto& e : h.epochs)
    if (e.val_mse < min_val) min_val = e.val_mse, argmin = e.epoch;
  EXPECT_EQ(h.best_epoch, argmin);
  const auto p = mlp::forward_rows(r.model, val.X);
  double mse = 0;
  for (int i = 0; i < 30; ++i) mse += (p[i] - val.y[i]) * (p[i] - val.y[i]) / 30;
  EXPECT_NEAR(mse, min_val, 1e-15);
  if (h.stop_reason == mlp::StopReason::early_stop) {
    EXPECT_LT(h.best_epoch, h.epochs.size());
  }
}

TEST(Lm, SeedDeterminism) {
  const auto s = xor_samples();
  LmConfig cfg;
  cfg.max_epochs = 30;
  const auto a = mlp::train_lm(mlp::init_network(2, 9), s, s, cfg);
  const auto b = mlp::train_lm(mlp::init_network(2, 9), s, s, cfg);
  EXPECT_EQ(a.history.to_csv(), b.history.to_csv());
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
}

TEST(Lm, WideInputUsesSameStepRule) {
  // More parameters than samples exercises the small-system solve.
  Samples train, val;
  train.X = random_matrix(10, 30, 7);
  val.X = random_matrix(5, 30, 8);
  for (int i = 0; i < 10; ++i) train.y.push_back(0.3 + 0.4 * train.X(i, 0));
  for (int i = 0; i < 5; ++i) val.y.push_back(0.3 + 0.4 * val.X(i, 0));
  LmConfig cfg;
  cfg.max_epochs = 20;
  cfg.patience = 20;
  const auto r = mlp::train_lm(mlp::init_network(30, 1), train, val, cfg);
  EXPECT_LT(r.history.epochs.back().train_mse, 1e-3);
  EXPECT_TRUE(r.model.finite());
}

TEST(Lm, ConfigValidation) {
  LmConfig cfg;
  cfg.patience = 0;
  EXPECT_THROW(mlp::validate(cfg), ConfigError);
  cfg = {};
  cfg.lambda_up = 1.0;
  EXPECT_THROW(mlp::validate(cfg), ConfigError);
  cfg = {};
  cfg.damping = mlp::Damping::marquardt;
  EXPECT_EQ(LmConfig::from_json(cfg.to_json()).damping, mlp::Damping::marquardt);
}

TEST(Lm, EmptySplitsRejected) {
  Samples empty;
  empty.X.resize(0, 2);
  EXPECT_THROW(mlp::train_lm(mlp::init_network(2, 1), xor_samples(), empty, LmConfig{}), DataError);
}

TEST(Model, JsonRoundTrip) {
  const auto m = mlp::init_network(6, 11, mlp::OutputActivation::linear);
  const auto back = MlpModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.parameters(), m.parameters());
  EXPECT_EQ(back.output, m.output);
}

TEST(History, CsvLayout) {
  mlp::TrainHistory h;
  h.epochs.push_back({1, 0.5, 0.25, 0.125, 1e-3, true});
  h.epochs.push_back({2, 0.25, 0.5, std::nullopt, 1e-4, true});
  const auto csv = h.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_mse,val_mse,test_mse");
  EXPECT_NE(csv.find("1,0.5,0.25,0.125"), std::string::npos);
  EXPECT_NE(csv.find("2,0.25,0.5,"), std::string::npos);
}
