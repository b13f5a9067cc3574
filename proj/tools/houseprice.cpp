// houseprice: extract SURF features, train and evaluate price estimators, run sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "houseprice/data.hpp"
#include "houseprice/errors.hpp"
#include "houseprice/experiment.hpp"
#include "houseprice/feature_cache.hpp"
#include "houseprice/sweep.hpp"
#include "houseprice/synthetic.hpp"

namespace fs = std::filesystem;
using namespace houseprice;

namespace {

constexpr int kExitData = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonconvergence = 3;

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // dataset
  std::string dataset;
  std::string tabular;
  std::string target;
  std::string cache;
  // surf
  double hessian_threshold = 600.0;
  int octaves = 4;
  bool upright = false;
  bool calibrate = false;
  unsigned jobs = 0;
  // experiment
  std::string estimator = "svr";
  std::size_t n_features = 0;
  std::uint64_t seed = 1;
  double svr_c = 1.0;
  double svr_epsilon = 0.01;
  double svr_tolerance = 1e-3;
  bool no_grid_search = false;
  std::string kernel = "histogram_intersection";
  double lambda0 = 1e-3;
  std::size_t patience = 6;
  std::size_t max_epochs = 1000;
  std::string output_activation = "sigmoid";
  std::string lm_damping = "identity";
  // outputs
  std::string out;
  std::string model;
  std::string manifest;
  std::string sweep_csv;
  bool strict = false;
  std::vector<std::size_t> n_values;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> estimators{"svr", "nn"};
  // synth
  synthetic::SyntheticConfig synth;
};

CLI::Option* threshold_option = nullptr;

unsigned job_count(const Options& o) {
  if (o.jobs > 0) return o.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

nlohmann::json surf_to_json(const surf::SurfParams& p) {
  return {{"hessian_threshold", p.hessian_threshold},
          {"octaves", p.octaves},
          {"upright", p.upright},
          {"initial_step", p.initial_step}};
}

surf::SurfParams surf_from_json(const nlohmann::json& doc) {
  surf::SurfParams p;
  p.hessian_threshold = doc.at("hessian_threshold").get<double>();
  p.octaves = doc.at("octaves").get<int>();
  p.upright = doc.at("upright").get<bool>();
  p.initial_step = doc.at("initial_step").get<int>();
  return p;
}

// Flags win; otherwise parameters recorded by a previous `extract` into the cache.
surf::SurfParams surf_params(const Options& o) {
  surf::SurfParams p;
  p.hessian_threshold = o.hessian_threshold;
  p.octaves = o.octaves;
  p.upright = o.upright;
  const fs::path recorded = fs::path(o.cache) / "params.json";
  if (!o.cache.empty() && threshold_option->count() == 0 && fs::exists(recorded)) {
    p.hessian_threshold = read_json(recorded).at("hessian_threshold").get<double>();
  }
  surf::validate(p);
  return p;
}

experiment::ExperimentConfig experiment_config(const Options& o) {
  experiment::ExperimentConfig c;
  c.estimator = experiment::parse_estimator(o.estimator);
  c.n_features = o.n_features;
  c.seed = o.seed;
  c.svr.C = o.svr_c;
  c.svr.epsilon = o.svr_epsilon;
  c.svr.tolerance = o.svr_tolerance;
  c.svr_grid_search = !o.no_grid_search;
  if (o.kernel == "histogram_intersection" || o.kernel == "hik") {
    c.kernel = svr::KernelSpec::histogram_intersection();
  } else if (o.kernel == "linear") {
    c.kernel = svr::KernelSpec::linear();
  } else {
    throw ConfigError("unknown kernel '" + o.kernel + "' (expected histogram_intersection or linear)");
  }
  c.lm.lambda0 = o.lambda0;
  c.lm.patience = o.patience;
  c.lm.max_epochs = o.max_epochs;
  if (o.output_activation != "sigmoid" && o.output_activation != "linear") {
    throw ConfigError("unknown output activation '" + o.output_activation + "'");
  }
  c.output = o.output_activation == "sigmoid" ? mlp::OutputActivation::sigmoid : mlp::OutputActivation::linear;
  if (o.lm_damping != "marquardt" && o.lm_damping != "identity") {
    throw ConfigError("unknown LM damping '" + o.lm_damping + "'");
  }
  c.lm.damping = o.lm_damping == "marquardt" ? mlp::Damping::marquardt : mlp::Damping::identity;
  experiment::validate(c);
  return c;
}

// Loads the dataset named by the options and serves feature tables per n.
class DatasetSource {
public:
  explicit DatasetSource(const Options& o) : opts_(o) {
    if (o.dataset.empty() == o.tabular.empty()) throw ConfigError("give exactly one of --dataset or --tabular");
    if (!o.tabular.empty()) {
      tabular_ = data::load_tabular_csv(o.tabular, o.target);
      return;
    }
    if (o.cache.empty()) throw ConfigError("--dataset needs --cache for extracted features");
    houses_ = data::load_houses_dataset(o.dataset);
    params_ = surf_params(o);
  }

  bool is_tabular() const { return tabular_.has_value(); }

  experiment::FeatureTable table(std::size_t n) {
    if (tabular_) return experiment::table_from_tabular(*tabular_);
    if (!features_) {
      features::ExtractSummary summary;
      features_ = features::extract_dataset(houses_, opts_.cache, params_, job_count(opts_), &summary);
      if (summary.computed > 0) {
        std::cerr << "extracted features for " << summary.computed << " images (" << summary.reused << " cached)\n";
      }
    }
    return experiment::build_feature_table(houses_, *features_, n);
  }

  nlohmann::json describe(const experiment::FeatureTable& t) const {
    nlohmann::json d;
    if (tabular_) {
      d["kind"] = "tabular";
      d["path"] = fs::absolute(opts_.tabular).string();
      d["target"] = opts_.target;
    } else {
      d["kind"] = "houses";
      d["path"] = fs::absolute(opts_.dataset).string();
      d["cache"] = fs::absolute(opts_.cache).string();
      d["surf"] = surf_to_json(params_);
    }
    d["rows"] = t.size();
    d["columns"] = t.X.cols();
    d["fingerprint"] = experiment::table_fingerprint(t);
    return d;
  }

private:
  const Options& opts_;
  std::optional<data::TabularDataset> tabular_;
  std::vector<data::HouseRecord> houses_;
  surf::SurfParams params_;
  std::optional<std::vector<features::HouseFeatures>> features_;
};

void print_reports(const experiment::ExperimentResult& r) {
  nlohmann::json doc{{"estimator", experiment::to_string(r.config.estimator)},
                     {"n_features", r.config.n_features},
                     {"seed", r.config.seed},
                     {"train_norm", r.train_norm.to_json()},
                     {"test_norm", r.test_norm.to_json()},
                     {"test_usd", r.test_usd.to_json()},
                     {"converged", r.converged}};
  std::cout << doc.dump(2) << '\n';
}

void save_run(const fs::path& dir, const experiment::ExperimentResult& r, const nlohmann::json& manifest) {
  fs::create_directories(dir);
  write_text(dir / "model.json", r.model.to_json().dump(2) + "\n");
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  if (r.history) write_text(dir / "history.csv", r.history->to_csv());
}

void check_convergence(const Options& o, const experiment::ExperimentResult& r) {
  if (r.converged) return;
  const std::string msg = std::string(experiment::to_string(r.config.estimator)) + " training did not converge";
  if (o.strict) throw NonConvergence(msg);
  std::cerr << "warning: " << msg << '\n';
}

int cmd_synth(const Options& o) {
  if (o.out.empty()) throw ConfigError("synth needs --out");
  const auto houses = synthetic::generate_houses(o.synth);
  synthetic::write_dataset(o.out, houses);
  std::cout << "wrote " << houses.size() << " synthetic houses to " << o.out << '\n';
  return 0;
}

int cmd_stats(const Options& o) {
  if (o.dataset.empty()) throw ConfigError("stats needs --dataset");
  const auto s = data::describe(data::load_houses_dataset(o.dataset));
  nlohmann::json doc{{"houses", s.count},
                     {"images", s.count * 4},
                     {"price", {{"mean", s.price_mean}, {"min", s.price_min}, {"max", s.price_max}}},
                     {"area", {{"mean", s.area_mean}, {"min", s.area_min}, {"max", s.area_max}}},
                     {"bedrooms_mean", s.bedrooms_mean},
                     {"bathrooms_mean", s.bathrooms_mean}};
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_extract(const Options& o) {
  if (o.dataset.empty() || o.cache.empty()) throw ConfigError("extract needs --dataset and --cache");
  const auto houses = data::load_houses_dataset(o.dataset);
  surf::SurfParams params = surf_params(o);
  if (o.calibrate) {
    params.hessian_threshold =
        features::calibrate_dataset_threshold(houses, params, fusion::kMaxFeaturesPerImage, job_count(o));
    std::cerr << "calibrated hessian threshold: " << params.hessian_threshold << '\n';
  }
  features::ExtractSummary s;
  features::extract_dataset(houses, o.cache, params, job_count(o), &s);
  write_text(fs::path(o.cache) / "params.json", surf_to_json(params).dump(2) + "\n");
  nlohmann::json doc{{"images", s.images},
                     {"computed", s.computed},
                     {"reused", s.reused},
                     {"candidates", s.describe.candidates},
                     {"dropped_orientation", s.describe.dropped_orientation},
                     {"dropped_window", s.describe.dropped_window},
                     {"degenerate", s.describe.degenerate},
                     {"images_below_15_points", s.fewer_than_max},
                     {"surf", surf_to_json(params)}};
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_replay(Options o) {
  const nlohmann::json recorded = read_json(o.manifest);
  if (recorded.value("format", "") != "houseprice.manifest") throw DataError(o.manifest + ": not a run manifest");
  const auto& ds = recorded.at("dataset");
  o.dataset.clear();
  o.tabular.clear();
  if (ds.at("kind") == "tabular") {
    o.tabular = ds.at("path").get<std::string>();
    o.target = ds.at("target").get<std::string>();
  } else {
    o.dataset = ds.at("path").get<std::string>();
    o.cache = ds.at("cache").get<std::string>();
    const auto p = surf_from_json(ds.at("surf"));
    o.hessian_threshold = p.hessian_threshold;
    o.octaves = p.octaves;
    o.upright = p.upright;
  }
  const auto cfg = experiment::ExperimentConfig::from_json(recorded.at("config"));
  DatasetSource source(o);
  const auto table = source.table(cfg.n_features);
  if (experiment::table_fingerprint(table) != ds.at("fingerprint").get<std::string>()) {
    throw DataError("replay: dataset fingerprint differs from the manifest");
  }
  const auto started = experiment::utc_timestamp();
  const auto result = experiment::run_experiment(table, cfg);
  const auto manifest = experiment::make_manifest(result, source.describe(table), started, experiment::utc_timestamp());
  print_reports(result);
  if (!o.out.empty()) save_run(o.out, result, manifest);
  if (manifest.at("metrics") != recorded.at("metrics")) {
    std::cerr << "replay: metrics differ from the manifest\n";
    return kExitData;
  }
  std::cerr << "replay: metrics identical to the manifest\n";
  check_convergence(o, result);
  return 0;
}

int cmd_train(const Options& o) {
  if (!o.manifest.empty()) return cmd_replay(o);
  const auto cfg = experiment_config(o);
  DatasetSource source(o);
  const auto table = source.table(cfg.n_features);
  const auto started = experiment::utc_timestamp();
  const auto result = experiment::run_experiment(table, cfg);
  const auto manifest = experiment::make_manifest(result, source.describe(table), started, experiment::utc_timestamp());
  print_reports(result);
  if (!o.out.empty()) save_run(o.out, result, manifest);
  check_convergence(o, result);
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.model.empty()) throw ConfigError("eval needs --model");
  const auto model = experiment::TrainedModel::from_json(read_json(o.model));
  DatasetSource source(o);
  const auto table = source.table(model.n_features);
  nlohmann::json doc{{"normalized", experiment::evaluate_model(model, table, metrics::Scale::normalized).to_json()},
                     {"usd", experiment::evaluate_model(model, table, metrics::Scale::usd).to_json()}};
  std::cout << doc.dump(2) << '\n';
  return 0;
}

void print_summary(const std::vector<sweep::SummaryPoint>& summary) {
  std::cout << "estimator,n,runs,failures,median_test_mse_usd,median_test_mse_norm,median_r_value\n";
  for (const auto& p : summary) {
    auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
    std::cout << experiment::to_string(p.estimator) << ',' << p.n << ',' << p.runs << ',' << p.failures << ','
              << cell(p.test_mse_usd) << ',' << cell(p.test_mse_norm) << ',' << cell(p.r_value) << '\n';
  }
}

int cmd_sweep(const Options& o) {
  if (o.out.empty()) throw ConfigError("sweep needs --out");
  sweep::SweepConfig cfg;
  cfg.base = experiment_config(o);
  DatasetSource source(o);
  if (!o.n_values.empty()) {
    cfg.n_values = o.n_values;
  } else if (source.is_tabular()) {
    cfg.n_values = {0};
  }
  cfg.seeds = o.seeds;
  cfg.jobs = job_count(o);
  cfg.estimators.clear();
  for (const auto& e : o.estimators) cfg.estimators.push_back(experiment::parse_estimator(e));

  fs::create_directories(o.out);
  std::ofstream errors(fs::path(o.out) / "errors.log");
  const auto rows = sweep::run_sweep(
      cfg, [&](std::size_t n) { return source.table(n); }, &errors,
      [](const sweep::SweepRow& r) {
        std::cerr << experiment::to_string(r.estimator) << " n=" << r.n << " seed=" << r.seed
                  << (r.ok() ? "" : " FAILED: " + r.error) << '\n';
      });
  sweep::write_csv(fs::path(o.out) / "sweep.csv", rows);
  const auto summary = sweep::summarize(rows);
  sweep::write_plots(o.out, summary);
  print_summary(summary);
  if (o.strict) {
    for (const auto& r : rows) {
      if (r.ok() && !r.converged) throw NonConvergence("at least one sweep run did not converge");
    }
  }
  return 0;
}

int cmd_report(const Options& o) {
  if (o.sweep_csv.empty()) throw ConfigError("report needs --sweep");
  const auto summary = sweep::summarize(sweep::read_csv(o.sweep_csv));
  sweep::write_plots(o.out.empty() ? fs::path(o.sweep_csv).parent_path() : fs::path(o.out), summary);
  print_summary(summary);
  return 0;
}

void add_dataset_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.dataset, "Houses dataset directory (HousesInfo.txt + images)");
  cmd->add_option("--tabular", o.tabular, "Numeric CSV dataset instead of images");
  cmd->add_option("--target", o.target, "Target column of --tabular (name or 0-based index)");
  cmd->add_option("--cache", o.cache, "Feature cache directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"House price estimation from photos and attributes"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file with option values");
  Options o;

  threshold_option = app.add_option("--hessian-threshold", o.hessian_threshold, "SURF detector threshold");
  app.add_option("--octaves", o.octaves, "SURF octaves (1-4)")->check(CLI::Range(1, 4));
  app.add_flag("--upright", o.upright, "Skip orientation assignment");
  app.add_option("--jobs", o.jobs, "Worker threads for extraction and sweeps (0 = all cores)");
  app.add_option("--estimator", o.estimator, "svr or nn")->check(CLI::IsMember({"svr", "nn"}));
  app.add_option("--n-features", o.n_features, "Descriptors per image (0-15)")->check(CLI::Range(0, 15));
  app.add_option("--seed", o.seed, "Split and initialization seed");
  app.add_option("--svr-c", o.svr_c, "SVR C when the grid search is off");
  app.add_option("--svr-epsilon", o.svr_epsilon, "SVR epsilon when the grid search is off");
  app.add_option("--svr-tolerance", o.svr_tolerance, "SMO stopping tolerance");
  app.add_flag("--no-grid-search", o.no_grid_search, "Use --svr-c/--svr-epsilon as given");
  app.add_option("--kernel", o.kernel, "histogram_intersection or linear");
  app.add_option("--lambda0", o.lambda0, "Initial LM damping");
  app.add_option("--patience", o.patience, "Validation increases before early stopping");
  app.add_option("--max-epochs", o.max_epochs, "LM epoch limit");
  app.add_option("--output-activation", o.output_activation, "sigmoid or linear");
  app.add_option("--lm-damping", o.lm_damping, "identity (default) or marquardt (diag(J'J))");
  app.add_flag("--strict", o.strict, "Exit with status 3 when training does not converge");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic houses dataset");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--houses", o.synth.houses, "Number of houses");
  synth->add_option("--size", o.synth.image_size, "Image side in pixels");
  synth->add_option("--synth-seed", o.synth.seed, "Generator seed");
  synth->add_option("--visual-share", o.synth.visual_share, "Share of the price driven by image content");
  synth->add_option("--price-noise", o.synth.noise, "Price noise relative to the score range");
  synth->add_option("--clutter", o.synth.clutter_blobs, "Clutter blobs per photo");

  auto* stats = app.add_subcommand("stats", "Summarize a houses dataset");
  stats->add_option("--dataset", o.dataset)->required();

  auto* extract = app.add_subcommand("extract", "Extract and cache SURF features");
  add_dataset_options(extract, o);
  extract->add_flag("--calibrate", o.calibrate, "Pick the threshold so half the images keep 15 points");

  auto* train = app.add_subcommand("train", "Train one estimator and report test metrics");
  add_dataset_options(train, o);
  train->add_option("--out", o.out, "Directory for model.json, manifest.json, history.csv");
  train->add_option("--manifest", o.manifest, "Replay a recorded run and compare its metrics");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a dataset");
  add_dataset_options(eval, o);
  eval->add_option("--model", o.model, "model.json from train")->required();

  auto* sw = app.add_subcommand("sweep", "Train over n, estimators and seeds");
  add_dataset_options(sw, o);
  sw->add_option("--out", o.out, "Output directory")->required();
  sw->add_option("--n-values", o.n_values, "Descriptor counts (default 0..15)");
  sw->add_option("--seeds", o.seeds, "Seeds (default 1 2 3 4 5)");
  sw->add_option("--estimators", o.estimators, "Estimators (default svr nn)");

  auto* report = app.add_subcommand("report", "Summarize a sweep CSV and draw plots");
  report->add_option("--sweep", o.sweep_csv, "sweep.csv")->required();
  report->add_option("--out", o.out, "Directory for the plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*stats) return cmd_stats(o);
    if (*extract) return cmd_extract(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*sw) return cmd_sweep(o);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNonconvergence;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitNonconvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
