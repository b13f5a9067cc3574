#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "houseprice/data.hpp"
#include "houseprice/feature_cache.hpp"
#include "houseprice/fusion.hpp"
#include "houseprice/metrics.hpp"
#include "houseprice/mlp.hpp"
#include "houseprice/svr.hpp"

namespace houseprice::experiment {

std::string_view software_version();

enum class Estimator { svr, nn };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);  // ConfigError on unknown names

struct ExperimentConfig {
  Estimator estimator = Estimator::svr;
  std::size_t n_features = 0;  // descriptors per image, 0..15
  std::uint64_t seed = 1;      // split seed; also seeds the network init
  svr::SvrConfig svr;
  svr::KernelSpec kernel;
  bool svr_grid_search = true;  // choose C and epsilon on a split of the training part
  mlp::LmConfig lm;
  mlp::OutputActivation output = mlp::OutputActivation::sigmoid;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

void validate(const ExperimentConfig& cfg);

/// Raw (unnormalized) design matrix with one row per sample.
struct FeatureTable {
  std::vector<int> ids;
  Eigen::MatrixXd X;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
};

FeatureTable build_feature_table(const std::vector<data::HouseRecord>& houses,
                                 const std::vector<features::HouseFeatures>& features, std::size_t n);
FeatureTable table_from_tabular(const data::TabularDataset& ds);

/// sha256 over the table's ids, values and targets.
std::string table_fingerprint(const FeatureTable& table);

/// Normalizers plus estimator: everything needed to price a raw vector.
struct TrainedModel {
  Estimator estimator = Estimator::svr;
  std::size_t n_features = 0;
  fusion::Normalizer inputs;
  fusion::Normalizer target;
  std::optional<svr::SvrModel> svr;
  std::optional<mlp::MlpModel> mlp;

  double predict_normalized(std::span<const double> raw) const;
  double predict_usd(std::span<const double> raw) const;
  /// Maps a normalized prediction to USD; a constant training target maps to that constant.
  double to_usd(double z) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& doc);
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::vector<std::size_t>> split;  // train[, val], test row indices
  TrainedModel model;
  metrics::EvalReport train_norm;
  metrics::EvalReport test_norm;
  metrics::EvalReport test_usd;
  std::optional<svr::GridChoice> grid;
  std::optional<mlp::TrainHistory> history;
  bool converged = false;
};

/// SVR: 80/20 split. NN: 70/15/15 split with validation early stopping; the
/// test part is only recorded in the history. Normalizers see the training
/// part only.
ExperimentResult run_experiment(const FeatureTable& table, const ExperimentConfig& cfg);

/// Evaluates a trained model on every row of `table`.
metrics::EvalReport evaluate_model(const TrainedModel& model, const FeatureTable& table, metrics::Scale scale);

std::string utc_timestamp();

/// Run record: configuration and its hash, dataset identity, split sizes,
/// chosen hyperparameters, metrics and timestamps.
nlohmann::json make_manifest(const ExperimentResult& result, const nlohmann::json& dataset,
                             const std::string& started_at, const std::string& finished_at);

}  // namespace houseprice::experiment
