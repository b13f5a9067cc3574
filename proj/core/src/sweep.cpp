#include "houseprice/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "houseprice/errors.hpp"
#include "houseprice/format.hpp"
#include "houseprice/parallel.hpp"
#include "houseprice/plot.hpp"

namespace houseprice::sweep {

void validate(const SweepConfig& cfg) {
  if (cfg.n_values.empty() || cfg.estimators.empty() || cfg.seeds.empty()) {
    throw ConfigError("sweep needs at least one n, estimator and seed");
  }
  for (std::size_t n : cfg.n_values) {
    if (n > fusion::kMaxFeaturesPerImage) {
      throw ConfigError("sweep n must be in 0.." + std::to_string(fusion::kMaxFeaturesPerImage) + ", got " +
                        std::to_string(n));
    }
  }
  experiment::validate(cfg.base);
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const TableProvider& tables, std::ostream* errors,
                                const Progress& progress) {
  validate(cfg);
  std::vector<SweepRow> rows;
  std::mutex progress_mutex;
  for (std::size_t n : cfg.n_values) {
    std::optional<experiment::FeatureTable> table;
    std::string table_error;
    try {
      table = tables(n);
    } catch (const std::exception& e) {
      table_error = e.what();
    }

    std::vector<SweepRow> block(cfg.estimators.size() * cfg.seeds.size());
    parallel_for(block.size(), cfg.jobs, [&](std::size_t k) {
      SweepRow& row = block[k];
      row.estimator = cfg.estimators[k / cfg.seeds.size()];
      row.n = n;
      row.seed = cfg.seeds[k % cfg.seeds.size()];
      try {
        if (!table) throw DataError(table_error);
        experiment::ExperimentConfig run = cfg.base;
        run.estimator = row.estimator;
        run.n_features = n;
        run.seed = row.seed;
        const auto res = experiment::run_experiment(*table, run);
        row.train_mse_norm = res.train_norm.mse;
        row.test_mse_norm = res.test_norm.mse;
        row.test_mse_usd = res.test_usd.mse;
        row.r_squared = res.test_usd.r_squared;
        row.r_value = res.test_usd.r_value;
        row.converged = res.converged;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(row);
      }
    });

    for (auto& row : block) {
      if (!row.ok() && errors) {
        *errors << "sweep " << experiment::to_string(row.estimator) << " n=" << row.n << " seed=" << row.seed << ": "
                << row.error << '\n';
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string csv_header() {
  return "estimator,n,seed,train_mse_norm,test_mse_norm,test_mse_usd,r_squared,r_value,converged";
}

std::string csv_row(const SweepRow& row) {
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream out;
  out << experiment::to_string(row.estimator) << ',' << row.n << ',' << row.seed << ',' << cell(row.train_mse_norm)
      << ',' << cell(row.test_mse_norm) << ',' << cell(row.test_mse_usd) << ',' << cell(row.r_squared) << ','
      << cell(row.r_value) << ',' << (row.converged ? "true" : "false");
  return out.str();
}

void write_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << csv_header() << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
}

std::vector<SweepRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw DataError(path.string() + ": not a sweep CSV");
  std::vector<SweepRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 9) throw DataError(where + ": expected 9 columns");
    try {
      SweepRow r;
      r.estimator = experiment::parse_estimator(cells[0]);
      r.n = std::stoul(cells[1]);
      r.seed = std::stoull(cells[2]);
      auto opt = [](const std::string& c) { return c.empty() ? std::nullopt : std::optional(parse_double_cell(c)); };
      r.train_mse_norm = opt(cells[3]);
      r.test_mse_norm = opt(cells[4]);
      r.test_mse_usd = opt(cells[5]);
      r.r_squared = opt(cells[6]);
      r.r_value = opt(cells[7]);
      if (cells[8] != "true" && cells[8] != "false") throw DataError("converged must be true or false");
      r.converged = cells[8] == "true";
      if (!r.test_mse_norm) r.error = "failed";
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return rows;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : (values[m - 1] + values[m]) / 2.0;
}

std::vector<SummaryPoint> summarize(const std::vector<SweepRow>& rows) {
  struct Acc {
    std::size_t runs = 0, failures = 0;
    std::vector<double> mse_norm, mse_usd, r2, r;
  };
  std::map<std::pair<int, std::size_t>, Acc> cells;
  for (const auto& row : rows) {
    Acc& a = cells[{static_cast<int>(row.estimator), row.n}];
    ++a.runs;
    if (!row.ok() || !row.test_mse_norm) {
      ++a.failures;
      continue;
    }
    a.mse_norm.push_back(*row.test_mse_norm);
    if (row.test_mse_usd) a.mse_usd.push_back(*row.test_mse_usd);
    if (row.r_squared) a.r2.push_back(*row.r_squared);
    if (row.r_value) a.r.push_back(*row.r_value);
  }
  std::vector<SummaryPoint> out;
  for (auto& [key, a] : cells) {
    SummaryPoint p;
    p.estimator = static_cast<experiment::Estimator>(key.first);
    p.n = key.second;
    p.runs = a.runs;
    p.failures = a.failures;
    p.test_mse_norm = median(a.mse_norm);
    p.test_mse_usd = median(a.mse_usd);
    p.r_squared = median(a.r2);
    p.r_value = median(a.r);
    out.push_back(p);
  }
  return out;
}

void write_plots(const std::filesystem::path& dir, const std::vector<SummaryPoint>& summary) {
  std::filesystem::create_directories(dir);
  std::map<int, plot::Series> mse, r;
  for (const auto& p : summary) {
    const int k = static_cast<int>(p.estimator);
    const std::string name(experiment::to_string(p.estimator));
    mse[k].name = name;
    r[k].name = name;
    if (p.test_mse_usd) mse[k].points.emplace_back(static_cast<double>(p.n), *p.test_mse_usd);
    if (p.r_value) r[k].points.emplace_back(static_cast<double>(p.n), *p.r_value);
  }
  auto values = [](const std::map<int, plot::Series>& m) {
    std::vector<plot::Series> v;
    for (const auto& [k, s] : m) v.push_back(s);
    return v;
  };
  auto save = [&](const std::string& file, const plot::ChartSpec& spec, const std::vector<plot::Series>& s) {
    std::ofstream out(dir / file);
    if (!out) throw DataError("cannot write " + (dir / file).string());
    out << plot::line_chart_svg(spec, s);
  };
  save("mse_vs_n.svg", {"Median test MSE vs descriptors per image", "n", "test MSE (USD^2)"}, values(mse));
  save("r_vs_n.svg", {"Median test R vs descriptors per image", "n", "test R"}, values(r));
}

}  // namespace houseprice::sweep
