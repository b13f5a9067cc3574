#include "houseprice/mlp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>
#include <sstream>

#include "houseprice/errors.hpp"
#include "houseprice/format.hpp"

namespace houseprice::mlp {

namespace {

double activate_output(OutputActivation a, double z) { return a == OutputActivation::sigmoid ? sigmoid(z) : z; }

double sse_of(const MlpModel& model, const Samples& s) {
  const Eigen::VectorXd pred = forward_rows(model, s.X);
  double total = 0.0;
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    const double e = pred[k] - s.y[static_cast<std::size_t>(k)];
    total += e * e;
  }
  return total;
}

void check_samples(const Samples& s, std::size_t dim, const char* name) {
  if (s.size() == 0) throw DataError(std::string(name) + " split is empty");
  if (static_cast<std::size_t>(s.X.rows()) != s.size()) throw DimensionError(std::string(name) + ": rows/targets mismatch");
  if (static_cast<std::size_t>(s.X.cols()) != dim) {
    throw DimensionError(std::string(name) + " has " + std::to_string(s.X.cols()) + " features, model expects " +
                         std::to_string(dim));
  }
}

}  // namespace

Eigen::VectorXd MlpModel::parameters() const {
  const Eigen::Index d = hidden_weights.cols();
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
    p.segment(k, d) = hidden_weights.row(j).transpose();
    k += d;
    p[k++] = hidden_bias[j];
  }
  p.segment(k, kHiddenUnits) = output_weights;
  k += kHiddenUnits;
  p[k] = output_bias;
  return p;
}

void MlpModel::set_parameters(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != parameter_count()) throw DimensionError("parameter vector has wrong length");
  const Eigen::Index d = hidden_weights.cols();
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
    hidden_weights.row(j) = p.segment(k, d).transpose();
    k += d;
    hidden_bias[j] = p[k++];
  }
  output_weights = p.segment(k, kHiddenUnits);
  k += kHiddenUnits;
  output_bias = p[k];
}

bool MlpModel::finite() const {
  return hidden_weights.allFinite() && hidden_bias.allFinite() && output_weights.allFinite() &&
         std::isfinite(output_bias);
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json doc;
  doc["format"] = "houseprice.mlp";
  doc["version"] = 1;
  doc["layer_sizes"] = layer_sizes();
  doc["output_activation"] = output == OutputActivation::sigmoid ? "sigmoid" : "linear";
  auto rows = nlohmann::json::array();
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
    rows.push_back(std::vector<double>(hidden_weights.row(j).begin(), hidden_weights.row(j).end()));
  }
  doc["hidden_weights"] = std::move(rows);
  doc["hidden_bias"] = std::vector<double>(hidden_bias.begin(), hidden_bias.end());
  doc["output_weights"] = std::vector<double>(output_weights.begin(), output_weights.end());
  doc["output_bias"] = output_bias;
  return doc;
}

MlpModel MlpModel::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "houseprice.mlp" || doc.value("version", 0) != 1) {
    throw DataError("not a version-1 MLP model document");
  }
  const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
  if (sizes.size() != 3 || sizes[1] != static_cast<std::size_t>(kHiddenUnits) || sizes[2] != 1) {
    throw DataError("MLP document: unsupported layer sizes");
  }
  const auto d = static_cast<Eigen::Index>(sizes[0]);
  MlpModel m;
  m.output = doc.at("output_activation").get<std::string>() == "linear" ? OutputActivation::linear
                                                                         : OutputActivation::sigmoid;
  m.hidden_weights.resize(kHiddenUnits, d);
  const auto& rows = doc.at("hidden_weights");
  if (rows.size() != static_cast<std::size_t>(kHiddenUnits)) throw DataError("MLP document: wrong hidden row count");
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
    const auto row = rows[static_cast<std::size_t>(j)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != d) throw DataError("MLP document: wrong hidden row length");
    for (Eigen::Index i = 0; i < d; ++i) m.hidden_weights(j, i) = row[static_cast<std::size_t>(i)];
  }
  const auto hb = doc.at("hidden_bias").get<std::vector<double>>();
  const auto ow = doc.at("output_weights").get<std::vector<double>>();
  if (hb.size() != static_cast<std::size_t>(kHiddenUnits) || ow.size() != static_cast<std::size_t>(kHiddenUnits)) {
    throw DataError("MLP document: wrong bias/output weight length");
  }
  m.hidden_bias = Eigen::Map<const Eigen::VectorXd>(hb.data(), kHiddenUnits);
  m.output_weights = Eigen::Map<const Eigen::VectorXd>(ow.data(), kHiddenUnits);
  m.output_bias = doc.at("output_bias").get<double>();
  return m;
}

MlpModel init_network(std::size_t input_dim, std::uint64_t seed, OutputActivation output) {
  if (input_dim < 1) throw ConfigError("network input dimension must be >= 1");
  std::mt19937_64 rng(seed);
  const double r1 = std::sqrt(6.0 / (static_cast<double>(input_dim) + kHiddenUnits));
  const double r2 = std::sqrt(6.0 / (kHiddenUnits + 1.0));
  std::uniform_real_distribution<double> hidden(-r1, r1);
  std::uniform_real_distribution<double> out(-r2, r2);

  MlpModel m;
  m.output = output;
  m.hidden_weights.resize(kHiddenUnits, static_cast<Eigen::Index>(input_dim));
  m.hidden_bias.resize(kHiddenUnits);
  m.output_weights.resize(kHiddenUnits);
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
    for (Eigen::Index i = 0; i < m.hidden_weights.cols(); ++i) m.hidden_weights(j, i) = hidden(rng);
    m.hidden_bias[j] = hidden(rng);
  }
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) m.output_weights[j] = out(rng);
  m.output_bias = out(rng);
  return m;
}

double forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw DimensionError("network input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(model.input_dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> in(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd hidden = (model.hidden_weights * in + model.hidden_bias).unaryExpr(&sigmoid);
  return activate_output(model.output, model.output_weights.dot(hidden) + model.output_bias);
}

Eigen::VectorXd forward_rows(const MlpModel& model, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != model.input_dim()) {
    throw DimensionError("network input has " + std::to_string(X.cols()) + " columns, expected " +
                         std::to_string(model.input_dim()));
  }
  const Eigen::MatrixXd hidden =
      ((X * model.hidden_weights.transpose()).rowwise() + model.hidden_bias.transpose()).unaryExpr(&sigmoid);
  Eigen::VectorXd z = (hidden * model.output_weights).array() + model.output_bias;
  if (model.output == OutputActivation::sigmoid) z = z.unaryExpr(&sigmoid);
  return z;
}

ResidualJacobian residual_jacobian(const MlpModel& model, const Eigen::MatrixXd& X, std::span<const double> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw DimensionError("Jacobian: rows/targets mismatch");
  if (static_cast<std::size_t>(X.cols()) != model.input_dim()) throw DimensionError("Jacobian: wrong input width");

  const Eigen::Index m = X.rows();
  const Eigen::Index d = X.cols();
  const Eigen::MatrixXd hidden =
      ((X * model.hidden_weights.transpose()).rowwise() + model.hidden_bias.transpose()).unaryExpr(&sigmoid);
  const Eigen::VectorXd z = (hidden * model.output_weights).array() + model.output_bias;

  ResidualJacobian out;
  out.residuals.resize(m);
  Eigen::VectorXd d_out(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double yhat = activate_output(model.output, z[k]);
    out.residuals[k] = yhat - y[static_cast<std::size_t>(k)];
    d_out[k] = model.output == OutputActivation::sigmoid ? yhat * (1.0 - yhat) : 1.0;
  }

  out.jacobian.resize(m, static_cast<Eigen::Index>(model.parameter_count()));
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) {
    const Eigen::ArrayXd h = hidden.col(j).array();
    const Eigen::VectorXd d_hidden = (d_out.array() * model.output_weights[j] * h * (1.0 - h)).matrix();
    out.jacobian.middleCols(col, d) = d_hidden.asDiagonal() * X;
    col += d;
    out.jacobian.col(col++) = d_hidden;
  }
  for (Eigen::Index j = 0; j < kHiddenUnits; ++j) out.jacobian.col(col++) = (d_out.array() * hidden.col(j).array()).matrix();
  out.jacobian.col(col) = d_out;
  return out;
}

nlohmann::json LmConfig::to_json() const {
  return {{"lambda0", lambda0},       {"lambda_up", lambda_up},   {"lambda_down", lambda_down},
          {"lambda_max", lambda_max}, {"max_epochs", max_epochs}, {"patience", patience},
          {"max_attempts", max_attempts}, {"seed", seed},
          {"damping", damping == Damping::marquardt ? "marquardt" : "identity"}};
}

LmConfig LmConfig::from_json(const nlohmann::json& doc) {
  LmConfig c;
  c.lambda0 = doc.at("lambda0").get<double>();
  c.lambda_up = doc.at("lambda_up").get<double>();
  c.lambda_down = doc.at("lambda_down").get<double>();
  c.lambda_max = doc.at("lambda_max").get<double>();
  c.max_epochs = doc.at("max_epochs").get<std::size_t>();
  c.patience = doc.at("patience").get<std::size_t>();
  c.max_attempts = doc.at("max_attempts").get<std::size_t>();
  c.seed = doc.at("seed").get<std::uint64_t>();
  const auto damping = doc.value("damping", std::string("identity"));
  if (damping != "marquardt" && damping != "identity") throw ConfigError("unknown damping '" + damping + "'");
  c.damping = damping == "marquardt" ? Damping::marquardt : Damping::identity;
  return c;
}

void validate(const LmConfig& cfg) {
  if (!(cfg.lambda0 > 0.0)) throw ConfigError("lambda0 must be > 0");
  if (!(cfg.lambda_up > 1.0) || !(cfg.lambda_down > 1.0)) throw ConfigError("lambda multipliers must be > 1");
  if (!(cfg.lambda_max > cfg.lambda0)) throw ConfigError("lambda_max must exceed lambda0");
  if (cfg.max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (cfg.patience == 0) throw ConfigError("patience must be >= 1");
  if (cfg.max_attempts == 0) throw ConfigError("max_attempts must be >= 1");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::early_stop: return "early_stop";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::converged: return "converged";
  }
  return "unknown";
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_mse,val_mse,test_mse\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << format_double(e.train_mse) << ',' << format_double(e.val_mse) << ','
        << (e.test_mse ? format_double(*e.test_mse) : "") << '\n';
  }
  return out.str();
}

bool EarlyStopper::update(double val_mse) {
  ++seen_;
  if (seen_ == 1 || val_mse < best_) {
    best_ = val_mse;
    best_epoch_ = seen_;
  }
  if (seen_ > 1 && val_mse > previous_) {
    ++increases_;
  } else {
    increases_ = 0;
  }
  previous_ = val_mse;
  return increases_ >= patience_;
}

namespace {

// Damped Gauss-Newton step solving (J'J + lambda D) delta = -J'r, D = diag(J'J)
// (floored) or the identity.
// With more parameters than residuals the equivalent m x m system
// delta = -D^-1 J' (J D^-1 J' + lambda I)^-1 r is solved instead.
class DampedSolver {
public:
  DampedSolver(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, Damping damping) : r_(r) {
    const Eigen::Index p = J.cols();
    if (damping == Damping::identity) {
      diag_ = Eigen::VectorXd::Ones(p);
    } else {
      diag_ = J.colwise().squaredNorm().transpose();
      for (Eigen::Index i = 0; i < p; ++i) diag_[i] = std::max(diag_[i], 1e-12);
    }
    wide_ = p > J.rows();
    if (wide_) {
      scaled_ = J * diag_.cwiseInverse().cwiseSqrt().asDiagonal();
      normal_ = Eigen::MatrixXd::Zero(J.rows(), J.rows());
      normal_.selfadjointView<Eigen::Lower>().rankUpdate(scaled_);
      normal_ = normal_.selfadjointView<Eigen::Lower>();
      jt_scaled_ = scaled_.transpose();
    } else {
      normal_ = Eigen::MatrixXd::Zero(p, p);
      normal_.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
      normal_ = normal_.selfadjointView<Eigen::Lower>();
      gradient_ = J.transpose() * r;
    }
  }

  std::optional<Eigen::VectorXd> step(double lambda) const {
    Eigen::MatrixXd A = normal_;
    Eigen::VectorXd delta;
    if (wide_) {
      A.diagonal().array() += lambda;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) return std::nullopt;
      const Eigen::VectorXd u = llt.solve(r_);
      delta = -(diag_.cwiseInverse().cwiseSqrt().asDiagonal() * (jt_scaled_ * u));
    } else {
      A.diagonal() += lambda * diag_;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) return std::nullopt;
      delta = -llt.solve(gradient_);
    }
    if (!delta.allFinite()) return std::nullopt;
    return delta;
  }

private:
  Eigen::VectorXd r_;
  Eigen::VectorXd diag_;
  bool wide_ = false;
  Eigen::MatrixXd scaled_;
  Eigen::MatrixXd jt_scaled_;
  Eigen::MatrixXd normal_;
  Eigen::VectorXd gradient_;
};

}  // namespace

TrainResult train_lm(MlpModel model, const Samples& train, const Samples& val, const LmConfig& cfg,
                     const Samples* test) {
  validate(cfg);
  check_samples(train, model.input_dim(), "training");
  check_samples(val, model.input_dim(), "validation");
  if (test) check_samples(*test, model.input_dim(), "test");
  if (!model.finite()) throw TrainingError("initial network weights are not finite");

  TrainResult result;
  TrainHistory& history = result.history;
  EarlyStopper stopper(cfg.patience);
  MlpModel best = model;

  double lambda = cfg.lambda0;
  double train_sse = sse_of(model, train);
  const auto n_train = static_cast<double>(train.size());
  history.stop_reason = StopReason::max_epochs;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const ResidualJacobian rj = residual_jacobian(model, train.X, train.y);
    const DampedSolver solver(rj.jacobian, rj.residuals, cfg.damping);
    const Eigen::VectorXd params = model.parameters();

    bool accepted = false;
    std::size_t numeric_failures = 0;
    for (std::size_t attempt = 0; attempt < cfg.max_attempts && lambda <= cfg.lambda_max; ++attempt) {
      const auto delta = solver.step(lambda);
      if (!delta) {
        ++numeric_failures;
        lambda *= cfg.lambda_up;
        continue;
      }
      MlpModel candidate = model;
      candidate.set_parameters(params + *delta);
      const double candidate_sse = sse_of(candidate, train);
      if (std::isfinite(candidate_sse) && candidate_sse < train_sse) {
        model = std::move(candidate);
        train_sse = candidate_sse;
        lambda = std::max(lambda / cfg.lambda_down, 1e-15);
        accepted = true;
        break;
      }
      lambda *= cfg.lambda_up;
    }
    if (numeric_failures == cfg.max_attempts) {
      throw TrainingError("damped normal equations failed " + std::to_string(numeric_failures) +
                          " times in epoch " + std::to_string(epoch) + " (lambda=" + format_double(lambda) +
                          ", train SSE=" + format_double(train_sse) + ")");
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = train_sse / n_train;
    rec.val_mse = sse_of(model, val) / static_cast<double>(val.size());
    if (test) rec.test_mse = sse_of(model, *test) / static_cast<double>(test->size());
    rec.lambda = lambda;
    rec.accepted = accepted;
    history.epochs.push_back(rec);

    const bool stop = stopper.update(rec.val_mse);
    if (stopper.best_epoch() == epoch) best = model;
    if (lambda > cfg.lambda_max) {
      history.stop_reason = StopReason::converged;
      break;
    }
    if (stop) {
      history.stop_reason = StopReason::early_stop;
      break;
    }
  }

  history.best_epoch = stopper.best_epoch();
  result.model = std::move(best);
  return result;
}

}  // namespace houseprice::mlp
