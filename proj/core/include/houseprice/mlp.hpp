#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace houseprice::mlp {

inline constexpr Eigen::Index kHiddenUnits = 4;

enum class OutputActivation { sigmoid, linear };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// input -> 4 sigmoid units -> 1 output.
///
/// Parameters are flattened hidden unit by hidden unit, each unit's input
/// weights followed by its bias, then the four output weights and the output
/// bias: 4 * (d_in + 1) + 5 values in total.
struct MlpModel {
  Eigen::MatrixXd hidden_weights;  // kHiddenUnits x d_in, row j feeds hidden unit j
  Eigen::VectorXd hidden_bias;     // kHiddenUnits
  Eigen::VectorXd output_weights;  // kHiddenUnits
  double output_bias = 0.0;
  OutputActivation output = OutputActivation::sigmoid;

  std::size_t input_dim() const { return static_cast<std::size_t>(hidden_weights.cols()); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(kHiddenUnits * (hidden_weights.cols() + 1) + kHiddenUnits + 1); }
  std::vector<std::size_t> layer_sizes() const { return {input_dim(), static_cast<std::size_t>(kHiddenUnits), 1}; }

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);
  bool finite() const;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& doc);
};

/// Uniform init in [-r, r], r = sqrt(6 / (fan_in + fan_out)) per layer, biases
/// included. Deterministic for a given seed.
MlpModel init_network(std::size_t input_dim, std::uint64_t seed,
                      OutputActivation output = OutputActivation::sigmoid);

double forward(const MlpModel& model, std::span<const double> x);
inline double predict_mlp(const MlpModel& model, std::span<const double> x) { return forward(model, x); }

/// Predictions for every row of X.
Eigen::VectorXd forward_rows(const MlpModel& model, const Eigen::MatrixXd& X);

struct ResidualJacobian {
  Eigen::VectorXd residuals;  // r_k = yhat_k - y_k
  Eigen::MatrixXd jacobian;   // J(k, p) = d r_k / d w_p, parameter order as in MlpModel::parameters()
};

ResidualJacobian residual_jacobian(const MlpModel& model, const Eigen::MatrixXd& X, std::span<const double> y);

struct Samples {
  Eigen::MatrixXd X;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
};

/// Damping matrix D in (J'J + lambda D): diag(J'J) or the identity (ablation).
enum class Damping { marquardt, identity };

struct LmConfig {
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double lambda_max = 1e10;  // damping above this counts as converged
  std::size_t max_epochs = 1000;
  std::size_t patience = 6;  // consecutive validation increases before stopping
  std::size_t max_attempts = 10;  // damped solves tried per epoch
  std::uint64_t seed = 0;  // weight init
  Damping damping = Damping::identity;  // J'J + lambda I; marquardt scales by diag(J'J)

  nlohmann::json to_json() const;
  static LmConfig from_json(const nlohmann::json& doc);
};

void validate(const LmConfig& cfg);

enum class StopReason { early_stop, max_epochs, converged };
std::string_view to_string(StopReason reason);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
  std::optional<double> test_mse;
  double lambda = 0.0;  // damping after this epoch
  bool accepted = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based index into epochs
  StopReason stop_reason = StopReason::max_epochs;

  /// epoch,train_mse,val_mse,test_mse
  std::string to_csv() const;
};

/// Tracks validation MSE per epoch: the best (first minimal) epoch and the
/// run of consecutive increases.
class EarlyStopper {
public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Feeds the next epoch's validation error; true once it has risen for
  /// `patience` consecutive epochs.
  bool update(double val_mse);

  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }
  std::size_t epochs_seen() const { return seen_; }

private:
  std::size_t patience_;
  std::size_t seen_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t increases_ = 0;
  double best_ = 0.0;
  double previous_ = 0.0;
};

struct TrainResult {
  MlpModel model;  // weights of best_epoch
  TrainHistory history;
};

/// Levenberg-Marquardt (damping per cfg.damping), one outer iteration
/// per epoch, stopping on validation increases, damping overflow or
/// max_epochs. `test`, when given, is only evaluated for the history.
TrainResult train_lm(MlpModel model, const Samples& train, const Samples& val, const LmConfig& cfg,
                     const Samples* test = nullptr);

}  // namespace houseprice::mlp
