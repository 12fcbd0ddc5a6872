#include "mesval/forecast/lstm.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::forecast {

namespace {

constexpr const char* kModule = "forecaster";

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

template <typename F>
void for_each_block(LstmParams& p, F&& f) {
  for (auto& m : p.Wx) f(m.data(), m.size());
  for (auto& m : p.Wh) f(m.data(), m.size());
  for (auto& v : p.b) f(v.data(), v.size());
  f(p.head_W.data(), p.head_W.size());
  f(p.head_b.data(), p.head_b.size());
}

template <typename F>
void for_each_block(const LstmParams& p, F&& f) {
  for_each_block(const_cast<LstmParams&>(p), [&](double* d, Eigen::Index n) { f(static_cast<const double*>(d), n); });
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_size) {
  if (input_dim < 1 || hidden_size < 1)
    throw InvalidInput(kModule, fmt::format("bad LSTM shape: input_dim {}, hidden_size {}", input_dim, hidden_size));
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_size = hidden_size;
  for (int k = 0; k < kGates; ++k) {
    p.Wx[k] = Matrix::Zero(input_dim, hidden_size);
    p.Wh[k] = Matrix::Zero(hidden_size, hidden_size);
    p.b[k] = Vector::Zero(hidden_size);
  }
  p.head_W = Matrix::Zero(kHorizon, hidden_size);
  p.head_b = Vector::Zero(kHorizon);
  return p;
}

LstmParams LstmParams::random(int input_dim, int hidden_size, std::uint64_t seed) {
  LstmParams p = zeros(input_dim, hidden_size);
  std::mt19937_64 rng(seed);
  const double r = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> u(-r, r);
  for_each_block(p, [&](double* d, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) d[i] = u(rng);
  });
  return p;
}

int LstmParams::size() const {
  return kGates * (input_dim * hidden_size + hidden_size * hidden_size + hidden_size) + kHorizon * hidden_size +
         kHorizon;
}

Vector LstmParams::flatten() const {
  Vector out(size());
  Eigen::Index at = 0;
  for_each_block(*this, [&](const double* d, Eigen::Index n) {
    out.segment(at, n) = Eigen::Map<const Vector>(d, n);
    at += n;
  });
  return out;
}

void LstmParams::assign(const Vector& flat) {
  if (flat.size() != size())
    throw InvalidInput(kModule, fmt::format("parameter vector has {} entries, expected {}", flat.size(), size()));
  Eigen::Index at = 0;
  for_each_block(*this, [&](double* d, Eigen::Index n) {
    Eigen::Map<Vector>(d, n) = flat.segment(at, n);
    at += n;
  });
}

void LstmParams::axpy(double a, const LstmParams& other) {
  for (int k = 0; k < kGates; ++k) {
    Wx[k] += a * other.Wx[k];
    Wh[k] += a * other.Wh[k];
    b[k] += a * other.b[k];
  }
  head_W += a * other.head_W;
  head_b += a * other.head_b;
}

void LstmParams::validate() const {
  auto bad = [&](const std::string& what) { throw InvalidInput(kModule, "LSTM parameters: " + what); };
  if (input_dim < 1 || hidden_size < 1) bad("non-positive dimensions");
  for (int k = 0; k < kGates; ++k) {
    if (Wx[k].rows() != input_dim || Wx[k].cols() != hidden_size) bad(fmt::format("Wx[{}] shape", k));
    if (Wh[k].rows() != hidden_size || Wh[k].cols() != hidden_size) bad(fmt::format("Wh[{}] shape", k));
    if (b[k].size() != hidden_size) bad(fmt::format("b[{}] shape", k));
  }
  if (head_W.rows() != kHorizon || head_W.cols() != hidden_size) bad("head weight shape");
  if (head_b.size() != kHorizon) bad("head bias shape");
  if (!flatten().allFinite()) bad("non-finite entry");
}

LstmState LstmState::zeros(int hidden_size) { return {Vector::Zero(hidden_size), Vector::Zero(hidden_size)}; }

CellStep lstm_cell_forward(const Vector& x, const LstmState& prev, const LstmParams& params) {
  const int H = params.hidden_size;
  if (x.size() != params.input_dim)
    throw InvalidInput(kModule, fmt::format("input has {} features, expected {}", x.size(), params.input_dim));
  if (prev.h.size() != H || prev.c.size() != H) throw InvalidInput(kModule, "state size differs from hidden_size");
  CellStep s;
  s.x = x;
  s.prev = prev;
  for (int k = 0; k < kGates; ++k) {
    Vector a = params.Wx[k].transpose() * x + params.Wh[k].transpose() * prev.h + params.b[k];
    s.gate[k] = k == kCandidate ? Vector(a.array().tanh()) : Vector(a.unaryExpr(&sigmoid));
  }
  s.next.c = s.gate[kForget].cwiseProduct(prev.c) + s.gate[kInputGate].cwiseProduct(s.gate[kCandidate]);
  s.tanh_c = s.next.c.array().tanh();
  s.next.h = s.gate[kOutputGate].cwiseProduct(s.tanh_c);
  return s;
}

DayForward forward_day(const Matrix& window, const LstmParams& params, const OutputScale& output) {
  if (window.rows() < 1) throw InvalidInput(kModule, "empty feature window");
  if (window.cols() != params.input_dim)
    throw InvalidInput(kModule,
                       fmt::format("window has {} features, expected {}", window.cols(), params.input_dim));
  if (!window.allFinite()) throw InvalidInput(kModule, "non-finite value in feature window");
  DayForward d;
  d.output = output;
  LstmState state = LstmState::zeros(params.hidden_size);
  d.steps.reserve(window.rows());
  for (Eigen::Index t = 0; t < window.rows(); ++t) {
    d.steps.push_back(lstm_cell_forward(window.row(t).transpose(), state, params));
    state = d.steps.back().next;
  }
  d.head_output = params.head_W * state.h + params.head_b;
  d.forecast.resize(kHorizon);
  d.clamped.assign(kHorizon, false);
  for (int j = 0; j < kHorizon; ++j) {
    const double v = output.offset + output.scale * d.head_output[j];
    d.clamped[j] = v < 0.0;
    d.forecast[j] = d.clamped[j] ? 0.0 : v;
  }
  return d;
}

LstmParams backward_day(const DayForward& cache, const LstmParams& params, const Vector& dloss_dforecast) {
  const int H = params.hidden_size;
  if (cache.steps.empty() || cache.head_output.size() != kHorizon)
    throw InvalidInput(kModule, "backward pass without a forward cache");
  if (cache.steps.front().prev.h.size() != H || cache.steps.front().x.size() != params.input_dim)
    throw InvalidInput(kModule, "forward cache does not match the parameters");
  if (dloss_dforecast.size() != kHorizon)
    throw InvalidInput(kModule, fmt::format("gradient has {} entries, expected {}", dloss_dforecast.size(), kHorizon));

  LstmParams g = LstmParams::zeros(params.input_dim, H);
  Vector dy(kHorizon);
  for (int j = 0; j < kHorizon; ++j) dy[j] = cache.clamped[j] ? 0.0 : cache.output.scale * dloss_dforecast[j];
  const Vector& h_last = cache.steps.back().next.h;
  g.head_W = dy * h_last.transpose();
  g.head_b = dy;

  Vector dh = params.head_W.transpose() * dy;
  Vector dc = Vector::Zero(H);
  for (auto it = cache.steps.rbegin(); it != cache.steps.rend(); ++it) {
    const CellStep& s = *it;
    const auto& F = s.gate[kForget];
    const auto& I = s.gate[kInputGate];
    const auto& O = s.gate[kOutputGate];
    const auto& G = s.gate[kCandidate];
    const Vector dO = dh.cwiseProduct(s.tanh_c);
    dc += dh.cwiseProduct(O).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
    std::array<Vector, kGates> da;
    da[kForget] = dc.cwiseProduct(s.prev.c).cwiseProduct(F.cwiseProduct((1.0 - F.array()).matrix()));
    da[kInputGate] = dc.cwiseProduct(G).cwiseProduct(I.cwiseProduct((1.0 - I.array()).matrix()));
    da[kOutputGate] = dO.cwiseProduct(O.cwiseProduct((1.0 - O.array()).matrix()));
    da[kCandidate] = dc.cwiseProduct(I).cwiseProduct((1.0 - G.array().square()).matrix());
    dh.setZero();
    for (int k = 0; k < kGates; ++k) {
      g.Wx[k] += s.x * da[k].transpose();
      g.Wh[k] += s.prev.h * da[k].transpose();
      g.b[k] += da[k];
      dh += params.Wh[k] * da[k];
    }
    dc = dc.cwiseProduct(F);
  }
  return g;
}

LstmParams apply_external_gradient(const LstmParams& params, const Vector& g, const Matrix& window, double lr,
                                   const OutputScale& output) {
  if (!(lr >= 0.0)) throw InvalidInput(kModule, "learning rate must be >= 0");
  const auto fwd = forward_day(window, params, output);
  LstmParams out = params;
  out.axpy(-lr, backward_day(fwd, params, g));
  return out;
}

}  // namespace mesval::forecast
