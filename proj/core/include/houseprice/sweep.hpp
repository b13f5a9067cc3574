#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "houseprice/experiment.hpp"

namespace houseprice::sweep {

struct SweepConfig {
  std::vector<std::size_t> n_values{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::vector<experiment::Estimator> estimators{experiment::Estimator::svr, experiment::Estimator::nn};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  experiment::ExperimentConfig base;  // estimator, n_features and seed are overridden per run
  unsigned jobs = 1;                   // concurrent runs per n
};

void validate(const SweepConfig& cfg);

/// One run. Metrics are empty when the run failed; `error` then holds the reason.
struct SweepRow {
  experiment::Estimator estimator = experiment::Estimator::svr;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<double> train_mse_norm;
  std::optional<double> test_mse_norm;
  std::optional<double> test_mse_usd;
  std::optional<double> r_squared;
  std::optional<double> r_value;
  bool converged = false;
  std::string error;

  bool ok() const { return error.empty(); }
};

/// Feature table for a given number of descriptors per image.
using TableProvider = std::function<experiment::FeatureTable(std::size_t n)>;
using Progress = std::function<void(const SweepRow&)>;

/// Runs every (n, estimator, seed) combination. Rows come back n-major in
/// config order whatever `jobs` is. A failing run becomes a row with empty
/// metrics and its message is written to `errors`. `progress` is called from
/// one thread at a time, in completion order.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const TableProvider& tables, std::ostream* errors = nullptr,
                                const Progress& progress = {});

/// estimator,n,seed,train_mse_norm,test_mse_norm,test_mse_usd,r_squared,r_value,converged
std::string csv_header();
std::string csv_row(const SweepRow& row);
void write_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_csv(const std::filesystem::path& path);

/// Medians over seeds for one (estimator, n) cell; failed runs are skipped.
struct SummaryPoint {
  experiment::Estimator estimator = experiment::Estimator::svr;
  std::size_t n = 0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::optional<double> test_mse_norm;
  std::optional<double> test_mse_usd;
  std::optional<double> r_squared;
  std::optional<double> r_value;
};

std::vector<SummaryPoint> summarize(const std::vector<SweepRow>& rows);

std::optional<double> median(std::vector<double> values);

/// Writes mse_vs_n.svg and r_vs_n.svg (median test metrics per estimator).
void write_plots(const std::filesystem::path& dir, const std::vector<SummaryPoint>& summary);

}  // namespace houseprice::sweep
