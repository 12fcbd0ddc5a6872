#include "mesval/forecast/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::forecast {

namespace {

constexpr const char* kModule = "forecaster";

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Vector m, v;
  int t = 0;

  Vector step(const Vector& grad, double lr) {
    if (m.size() == 0) {
      m = Vector::Zero(grad.size());
      v = Vector::Zero(grad.size());
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    return -lr * ((m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
  }
};

// Loss and full-batch gradient in one pass.
double mse_with_gradient(const SectorModel& model, const std::vector<Sample>& samples, LstmParams* grad) {
  const double scale = model.norm.scale();
  const double denom = static_cast<double>(samples.size()) * kHorizon;
  double loss = 0.0;
  if (grad) *grad = LstmParams::zeros(model.params.input_dim, model.params.hidden_size);
  for (const auto& s : samples) {
    const auto fwd = model.forward(s.window);
    const Vector err = (fwd.forecast - s.target) / scale;
    loss += err.squaredNorm() / denom;
    if (grad) grad->axpy(1.0, backward_day(fwd, model.params, 2.0 * err / (scale * denom)));
  }
  return loss;
}

}  // namespace

double Normalization::scale() const { return hi > lo ? hi - lo : std::max(std::abs(hi), 1.0); }

Normalization Normalization::fit(const std::vector<double>& loads) {
  if (loads.empty()) throw InvalidInput(kModule, "cannot fit normalization on an empty series");
  Normalization n;
  n.lo = loads.front();
  n.hi = loads.front();
  for (double x : loads) {
    if (!std::isfinite(x)) throw InvalidInput(kModule, "non-finite load in normalization data");
    n.lo = std::min(n.lo, x);
    n.hi = std::max(n.hi, x);
  }
  return n;
}

Matrix make_window(const std::vector<double>& loads, int start, int window, int weekday0, const Normalization& norm) {
  if (window < 1) throw InvalidInput(kModule, "window must be >= 1");
  if (start - window < 0 || start > static_cast<int>(loads.size()))
    throw InvalidInput(kModule, fmt::format("window of {} hours before hour {} is outside the series", window, start));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Matrix w(window, kFeatureDim);
  for (int r = 0; r < window; ++r) {
    const int k = start - window + r;
    const double hour = k % 24;
    const double day = (weekday0 + k / 24) % 7;
    w(r, 0) = norm.to_unit(loads[k]);
    w(r, 1) = std::sin(two_pi * hour / 24.0);
    w(r, 2) = std::cos(two_pi * hour / 24.0);
    w(r, 3) = std::sin(two_pi * day / 7.0);
    w(r, 4) = std::cos(two_pi * day / 7.0);
  }
  return w;
}

std::string model_to_text(const SectorModel& model) {
  model.params.validate();
  std::string out = fmt::format("mesval-lstm {}\nsector {}\nshape {} {} {}\nseed {}\nnorm {:.17g} {:.17g}\nparams {}\n",
                                kModelFileVersion, model.sector.empty() ? "-" : model.sector, model.params.input_dim,
                                model.params.hidden_size, kHorizon, model.seed, model.norm.lo, model.norm.hi,
                                model.params.size());
  const Vector flat = model.params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) out += fmt::format("{:.17g}\n", flat[i]);
  return out;
}

SectorModel model_from_text(const std::string& text) {
  std::istringstream in(text);
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(in >> k) || k != key) throw DataError(kModule, "model file: expected '" + key + "'");
  };
  int version = 0, input_dim = 0, hidden = 0, horizon = 0, count = 0;
  SectorModel m;
  expect("mesval-lstm");
  if (!(in >> version) || version != kModelFileVersion)
    throw DataError(kModule, fmt::format("model file: unsupported version {}", version));
  expect("sector");
  in >> m.sector;
  if (m.sector == "-") m.sector.clear();
  expect("shape");
  in >> input_dim >> hidden >> horizon;
  if (horizon != kHorizon) throw DataError(kModule, fmt::format("model file: horizon {} != {}", horizon, kHorizon));
  expect("seed");
  in >> m.seed;
  expect("norm");
  in >> m.norm.lo >> m.norm.hi;
  expect("params");
  in >> count;
  if (!in || input_dim < 1 || hidden < 1) throw DataError(kModule, "model file: malformed header");
  m.params = LstmParams::zeros(input_dim, hidden);
  if (count != m.params.size())
    throw DataError(kModule, fmt::format("model file: {} parameters, shape needs {}", count, m.params.size()));
  Vector flat(count);
  for (int i = 0; i < count; ++i)
    if (!(in >> flat[i])) throw DataError(kModule, fmt::format("model file: missing parameter {}", i));
  m.params.assign(flat);
  m.params.validate();
  return m;
}

void save_model(const SectorModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError(kModule, "cannot write " + path);
  f << model_to_text(model);
}

SectorModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError(kModule, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return model_from_text(ss.str());
}

void TrainingConfig::validate() const {
  if (!(lr > 0.0) || !(lr_e2e >= 0.0)) throw InvalidInput(kModule, "learning rates must be positive");
  if (epochs_mse < 0 || epochs_e2e < 0) throw InvalidInput(kModule, "epoch counts must be >= 0");
  if (window < 1) throw InvalidInput(kModule, "window must be >= 1");
  if (hidden_size < 1) throw InvalidInput(kModule, "hidden_size must be >= 1");
}

double mse_loss(const SectorModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidInput(kModule, "empty dataset");
  return mse_with_gradient(model, samples, nullptr);
}

MseTrace train_mse_from(SectorModel model, const std::vector<Sample>& samples, const TrainingConfig& config) {
  config.validate();
  if (samples.empty()) throw InvalidInput(kModule, "empty dataset");
  MseTrace trace;
  Adam adam;
  LstmParams grad;
  for (int e = 0; e < config.epochs_mse; ++e) {
    trace.loss.push_back(mse_with_gradient(model, samples, &grad));
    if (config.optimizer == Optimizer::kAdam) {
      Vector flat = model.params.flatten();
      flat += adam.step(grad.flatten(), config.lr);
      model.params.assign(flat);
    } else {
      model.params.axpy(-config.lr, grad);
    }
  }
  trace.model = std::move(model);
  return trace;
}

MseTrace train_mse(const std::vector<Sample>& samples, const Normalization& norm, const TrainingConfig& config,
                   const std::string& sector) {
  config.validate();
  if (samples.empty()) throw InvalidInput(kModule, "empty dataset");
  SectorModel m;
  m.sector = sector;
  m.norm = norm;
  m.seed = config.seed;
  m.params = LstmParams::random(static_cast<int>(samples.front().window.cols()), config.hidden_size, config.seed);
  return train_mse_from(std::move(m), samples, config);
}

ForecastMetrics metrics(const std::vector<double>& forecasts, const std::vector<double>& actuals, bool with_mape) {
  if (forecasts.size() != actuals.size())
    throw InvalidInput(kModule, fmt::format("metrics: {} forecasts vs {} actuals", forecasts.size(), actuals.size()));
  if (forecasts.empty()) throw InvalidInput(kModule, "metrics: empty input");
  ForecastMetrics m;
  const double n = static_cast<double>(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double e = forecasts[i] - actuals[i];
    m.mae += std::abs(e) / n;
    m.rmse += e * e / n;
    if (with_mape) {
      if (actuals[i] == 0.0)
        throw InvalidInput(kModule, fmt::format("MAPE: division by zero, actual is 0 at index {}", i));
      m.mape += 100.0 * std::abs(e / actuals[i]) / n;
    }
  }
  m.rmse = std::sqrt(m.rmse);
  return m;
}

}  // namespace mesval::forecast
