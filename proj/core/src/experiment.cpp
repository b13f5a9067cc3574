#include "houseprice/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include "houseprice/errors.hpp"
#include "houseprice/hash.hpp"

#ifndef HOUSEPRICE_VERSION
#define HOUSEPRICE_VERSION "0.0.0"
#endif

namespace houseprice::experiment {

std::string_view software_version() { return HOUSEPRICE_VERSION; }

std::string_view to_string(Estimator e) { return e == Estimator::svr ? "svr" : "nn"; }

Estimator parse_estimator(std::string_view name) {
  if (name == "svr") return Estimator::svr;
  if (name == "nn") return Estimator::nn;
  throw ConfigError("unknown estimator '" + std::string(name) + "' (expected svr or nn)");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"estimator", to_string(estimator)},
          {"n_features", n_features},
          {"seed", seed},
          {"svr", svr.to_json()},
          {"kernel", kernel.to_json()},
          {"svr_grid_search", svr_grid_search},
          {"lm", lm.to_json()},
          {"output", output == mlp::OutputActivation::sigmoid ? "sigmoid" : "linear"}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  c.estimator = parse_estimator(doc.at("estimator").get<std::string>());
  c.n_features = doc.at("n_features").get<std::size_t>();
  c.seed = doc.at("seed").get<std::uint64_t>();
  c.svr = svr::SvrConfig::from_json(doc.at("svr"));
  c.kernel = svr::KernelSpec::from_json(doc.at("kernel"));
  c.svr_grid_search = doc.at("svr_grid_search").get<bool>();
  c.lm = mlp::LmConfig::from_json(doc.at("lm"));
  const auto out = doc.at("output").get<std::string>();
  if (out != "sigmoid" && out != "linear") throw ConfigError("unknown output activation '" + out + "'");
  c.output = out == "sigmoid" ? mlp::OutputActivation::sigmoid : mlp::OutputActivation::linear;
  return c;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_features > fusion::kMaxFeaturesPerImage) {
    throw ConfigError("n_features must be in 0.." + std::to_string(fusion::kMaxFeaturesPerImage) + ", got " +
                      std::to_string(cfg.n_features));
  }
  svr::validate(cfg.svr);
  mlp::validate(cfg.lm);
}

FeatureTable build_feature_table(const std::vector<data::HouseRecord>& houses,
                                 const std::vector<features::HouseFeatures>& features, std::size_t n) {
  if (features.size() != houses.size()) {
    throw DimensionError("features for " + std::to_string(features.size()) + " houses, dataset has " +
                         std::to_string(houses.size()));
  }
  FeatureTable t;
  t.X.resize(static_cast<Eigen::Index>(houses.size()), static_cast<Eigen::Index>(fusion::fused_length(n)));
  for (std::size_t i = 0; i < houses.size(); ++i) {
    if (features[i].house_id != houses[i].id) throw DataError("feature/house order mismatch at house " + std::to_string(houses[i].id));
    const auto v = fusion::assemble(houses[i], features[i].per_image, n);
    for (std::size_t c = 0; c < v.values.size(); ++c) {
      t.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v.values[c];
    }
    t.ids.push_back(houses[i].id);
    t.y.push_back(houses[i].price);
  }
  return t;
}

FeatureTable table_from_tabular(const data::TabularDataset& ds) {
  FeatureTable t;
  t.X.resize(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ds.feature_count()));
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (ds.rows[r].size() != ds.feature_count()) throw DimensionError("ragged tabular row " + std::to_string(r + 1));
    for (std::size_t c = 0; c < ds.feature_count(); ++c) {
      t.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ds.rows[r][c];
    }
    t.ids.push_back(static_cast<int>(r) + 1);
  }
  t.y = ds.targets;
  return t;
}

std::string table_fingerprint(const FeatureTable& table) {
  Sha256 h;
  auto put = [&](const void* p, std::size_t bytes) {
    h.update(std::span<const std::uint8_t>(static_cast<const std::uint8_t*>(p), bytes));
  };
  const std::int64_t rows = table.X.rows(), cols = table.X.cols();
  put(&rows, sizeof rows);
  put(&cols, sizeof cols);
  put(table.ids.data(), table.ids.size() * sizeof(int));
  for (Eigen::Index r = 0; r < table.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.X.cols(); ++c) {
      const double v = table.X(r, c);
      put(&v, sizeof v);
    }
  }
  put(table.y.data(), table.y.size() * sizeof(double));
  return h.hex_digest();
}

double TrainedModel::predict_normalized(std::span<const double> raw) const {
  const Eigen::VectorXd z = inputs.normalize(raw);
  const std::span<const double> zs(z.data(), static_cast<std::size_t>(z.size()));
  if (svr) return svr->predict(zs);
  if (mlp) return mlp::forward(*mlp, zs);
  throw ConfigError("trained model holds no estimator");
}

double TrainedModel::to_usd(double z) const {
  if (target.is_constant(0)) return target.min()[0];
  return target.denormalize(z, 0);
}

double TrainedModel::predict_usd(std::span<const double> raw) const { return to_usd(predict_normalized(raw)); }

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json doc;
  doc["format"] = "houseprice.model";
  doc["version"] = 1;
  doc["estimator"] = to_string(estimator);
  doc["n_features"] = n_features;
  doc["input_normalizer"] = inputs.to_json();
  doc["target_normalizer"] = target.to_json();
  if (svr) doc["model"] = svr->to_json();
  if (mlp) doc["model"] = mlp->to_json();
  return doc;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "houseprice.model" || doc.value("version", 0) != 1) {
    throw DataError("not a version-1 model document");
  }
  TrainedModel m;
  m.estimator = parse_estimator(doc.at("estimator").get<std::string>());
  m.n_features = doc.at("n_features").get<std::size_t>();
  m.inputs = fusion::Normalizer::from_json(doc.at("input_normalizer"));
  m.target = fusion::Normalizer::from_json(doc.at("target_normalizer"));
  if (m.target.dimension() != 1) throw DataError("model document: target normalizer must be one-dimensional");
  if (m.estimator == Estimator::svr) {
    m.svr = svr::SvrModel::from_json(doc.at("model"));
  } else {
    m.mlp = mlp::MlpModel::from_json(doc.at("model"));
  }
  return m;
}

namespace {

FeatureTable rows_of(const FeatureTable& t, const std::vector<std::size_t>& idx) {
  FeatureTable out;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), t.X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.X.row(static_cast<Eigen::Index>(k)) = t.X.row(static_cast<Eigen::Index>(idx[k]));
    out.ids.push_back(t.ids[idx[k]]);
    out.y.push_back(t.y[idx[k]]);
  }
  return out;
}

std::vector<double> normalize_targets(const fusion::Normalizer& nrm, const std::vector<double>& y) {
  std::vector<double> z;
  z.reserve(y.size());
  for (double v : y) z.push_back(nrm.normalize_value(v));
  return z;
}

std::vector<double> predict_rows(const TrainedModel& m, const Eigen::MatrixXd& Z) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(Z.rows()));
  if (m.mlp) {
    const Eigen::VectorXd p = mlp::forward_rows(*m.mlp, Z);
    return {p.data(), p.data() + p.size()};
  }
  std::vector<double> buf(static_cast<std::size_t>(Z.cols()));
  for (Eigen::Index r = 0; r < Z.rows(); ++r) {
    for (Eigen::Index c = 0; c < Z.cols(); ++c) buf[static_cast<std::size_t>(c)] = Z(r, c);
    out.push_back(m.svr->predict(buf));
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const FeatureTable& table, const ExperimentConfig& cfg) {
  validate(cfg);
  if (table.size() != static_cast<std::size_t>(table.X.rows())) throw DimensionError("feature table rows/targets mismatch");
  if (!table.X.allFinite()) throw DataError("feature table contains non-finite values");

  ExperimentResult res;
  res.config = cfg;
  const bool nn = cfg.estimator == Estimator::nn;
  res.split = data::split(table.size(), nn ? data::SplitSpec::train_val_test(cfg.seed)
                                           : data::SplitSpec::train_test(cfg.seed));
  const FeatureTable train = rows_of(table, res.split.front());
  const FeatureTable test = rows_of(table, res.split.back());

  TrainedModel& model = res.model;
  model.estimator = cfg.estimator;
  model.n_features = cfg.n_features;
  model.inputs = fusion::Normalizer::fit(train.X);
  model.target = fusion::Normalizer::fit(train.y);

  const Eigen::MatrixXd Ztrain = model.inputs.normalize_rows(train.X);
  const Eigen::MatrixXd Ztest = model.inputs.normalize_rows(test.X);
  const std::vector<double> ztrain = normalize_targets(model.target, train.y);
  const std::vector<double> ztest = normalize_targets(model.target, test.y);

  if (nn) {
    const FeatureTable val = rows_of(table, res.split[1]);
    mlp::LmConfig lm = cfg.lm;
    lm.seed = cfg.seed;
    const mlp::Samples tr{Ztrain, ztrain};
    const mlp::Samples va{model.inputs.normalize_rows(val.X), normalize_targets(model.target, val.y)};
    const mlp::Samples te{Ztest, ztest};
    auto trained = mlp::train_lm(mlp::init_network(static_cast<std::size_t>(Ztrain.cols()), lm.seed, cfg.output), tr,
                                 va, lm, &te);
    model.mlp = std::move(trained.model);
    res.converged = trained.history.stop_reason != mlp::StopReason::max_epochs;
    res.history = std::move(trained.history);
  } else {
    svr::SvrConfig svr_cfg = cfg.svr;
    if (cfg.svr_grid_search) {
      const auto inner = data::split(train.size(), data::SplitSpec::train_test(cfg.seed));
      const FeatureTable fit_part = rows_of(train, inner[0]);
      const FeatureTable val_part = rows_of(train, inner[1]);
      // Same scaling as the final model: the outer normalizers.
      res.grid = svr::grid_search(model.inputs.normalize_rows(fit_part.X), normalize_targets(model.target, fit_part.y),
                                  model.inputs.normalize_rows(val_part.X), normalize_targets(model.target, val_part.y),
                                  svr_cfg, cfg.kernel);
      svr_cfg.C = res.grid->C;
      svr_cfg.epsilon = res.grid->epsilon;
    }
    model.svr = svr::train_svr(Ztrain, ztrain, svr_cfg, cfg.kernel);
    res.converged = model.svr->converged;
  }

  const auto ptrain = predict_rows(model, Ztrain);
  const auto ptest = predict_rows(model, Ztest);
  res.train_norm = metrics::evaluate(ptrain, ztrain, metrics::Scale::normalized);
  res.test_norm = metrics::evaluate(ptest, ztest, metrics::Scale::normalized);
  std::vector<double> usd;
  usd.reserve(ptest.size());
  for (double z : ptest) usd.push_back(model.to_usd(z));
  res.test_usd = metrics::evaluate(usd, test.y, metrics::Scale::usd);
  return res;
}

metrics::EvalReport evaluate_model(const TrainedModel& model, const FeatureTable& table, metrics::Scale scale) {
  if (static_cast<std::size_t>(table.X.cols()) != model.inputs.dimension()) {
    throw DimensionError("dataset has " + std::to_string(table.X.cols()) + " features, model expects " +
                         std::to_string(model.inputs.dimension()));
  }
  const auto z = predict_rows(model, model.inputs.normalize_rows(table.X));
  if (scale == metrics::Scale::normalized) return metrics::evaluate(z, normalize_targets(model.target, table.y), scale);
  std::vector<double> usd;
  usd.reserve(z.size());
  for (double v : z) usd.push_back(model.to_usd(v));
  return metrics::evaluate(usd, table.y, scale);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json make_manifest(const ExperimentResult& result, const nlohmann::json& dataset,
                             const std::string& started_at, const std::string& finished_at) {
  const nlohmann::json config = result.config.to_json();
  nlohmann::json doc;
  doc["format"] = "houseprice.manifest";
  doc["version"] = 1;
  doc["software_version"] = software_version();
  doc["config"] = config;
  doc["config_hash"] = sha256_hex(config.dump());
  doc["dataset"] = dataset;
  doc["seed"] = result.config.seed;
  auto sizes = nlohmann::json::array();
  for (const auto& part : result.split) sizes.push_back(part.size());
  doc["split_sizes"] = sizes;

  nlohmann::json hyper;
  if (result.model.svr) {
    hyper["C"] = result.model.svr->config.C;
    hyper["epsilon"] = result.model.svr->config.epsilon;
    if (result.grid) hyper["grid_validation_mse"] = result.grid->validation_mse;
  } else {
    hyper["lambda0"] = result.config.lm.lambda0;
    hyper["patience"] = result.config.lm.patience;
    if (result.history) {
      hyper["best_epoch"] = result.history->best_epoch;
      hyper["epochs_run"] = result.history->epochs.size();
      hyper["stop_reason"] = mlp::to_string(result.history->stop_reason);
    }
  }
  doc["hyperparameters"] = hyper;
  doc["metrics"] = {{"train_norm", result.train_norm.to_json()},
                    {"test_norm", result.test_norm.to_json()},
                    {"test_usd", result.test_usd.to_json()}};
  doc["converged"] = result.converged;
  doc["started_at"] = started_at;
  doc["finished_at"] = finished_at;
  return doc;
}

}  // namespace houseprice::experiment
