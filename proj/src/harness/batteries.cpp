#include "mesval/harness/batteries.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mesval/common/error.hpp"
#include "mesval/forecast/lstm.hpp"

namespace mesval::harness {

namespace {

using lp::Matrix;
using lp::Vector;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kKeepFailures = 5;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct LpInstance {
  lp::LPStandardForm lp;
  Vector params;
};

// Instance k of an LP battery depends only on (seed, k).
LpInstance lp_instance(std::uint64_t seed, int k) {
  std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(k));
  std::uniform_int_distribution<int> n(2, 10), q(1, 8), r(0, 2), p(1, 4);
  const int nv = n(rng);
  const int nq = q(rng);
  const int nr = std::min(r(rng), nv - 1);
  const int np = p(rng);
  LpInstance out{random_feasible_lp(rng, nv, nq, nr, np), Vector()};
  // |M| <= 0.04 keeps the shifted rows below the generator's minimum slack of 0.2.
  std::uniform_real_distribution<double> u(-0.04, 0.04);
  out.params.resize(np);
  for (int i = 0; i < np; ++i) out.params[i] = u(rng);
  return out;
}

// Strict complementarity and a vertex determined by the active rows.
bool nondegenerate(const lp::LPStandardForm& lp, const lp::LPSolution& sol, const Vector& m) {
  const auto folded = lp::fold_bounds(lp);
  const Vector f = folded.ineq_values(sol.primal, m);
  int active = 0;
  for (int i = 0; i < f.size(); ++i) {
    const bool tight = std::abs(f[i]) <= 1e-9;
    const bool priced = sol.ineq_duals[i] > 1e-9;
    if (tight != priced) return false;
    active += priced;
  }
  return active + lp.num_eq() == lp.n_vars;
}

}  // namespace

std::string BatteryResult::summary() const {
  return fmt::format("{}: {} instances, {} comparisons, {} skipped, worst {:.3e} (tol {:.0e}), {:.2f} s", name,
                     instances, checked, skipped, worst, tolerance, seconds);
}

void BatteryResult::fail(std::string what) {
  if (failures.size() < kKeepFailures) failures.push_back(std::move(what));
  else if (failures.size() == kKeepFailures) failures.push_back("...");
}

lp::LPStandardForm random_feasible_lp(std::mt19937_64& rng, int n, int q, int r, int p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> slack(0.2, 1.5);
  lp::LPStandardForm lp;
  lp.n_vars = n;
  lp.param_dim = p;
  lp.cost.resize(n);
  for (int j = 0; j < n; ++j) lp.cost[j] = 3.0 * u(rng);
  lp.lower = Vector::Constant(n, -4.0);
  lp.upper = Vector::Constant(n, 4.0);
  Vector z0(n);
  for (int j = 0; j < n; ++j) z0[j] = u(rng);
  auto fill = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
  };
  const Matrix af = fill(q, n), ah = fill(r, n), pf = fill(q, p), ph = fill(r, p);
  lp.ineq_rhs = af * z0;
  for (int i = 0; i < q; ++i) lp.ineq_rhs[i] += slack(rng);
  lp.eq_rhs = ah * z0;
  lp.ineq_matrix = af.sparseView();
  lp.eq_matrix = ah.sparseView();
  lp.ineq_param = pf.sparseView();
  lp.eq_param = ph.sparseView();
  return lp;
}

milp::MILPProblem random_binary_milp(std::mt19937_64& rng, int nb, int nc, int q, int p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> slack(0.05, 0.5);
  std::bernoulli_distribution coin(0.5);
  const int n = nb + nc;
  milp::MILPProblem prob;
  auto& lp = prob.base;
  lp.n_vars = n;
  lp.param_dim = p;
  lp.cost.resize(n);
  lp.lower = Vector::Zero(n);
  lp.upper = Vector::Ones(n);
  Vector z0(n);
  for (int j = 0; j < n; ++j) {
    const bool binary = j < nb;
    lp.cost[j] = u(rng) * (binary ? 2.0 : 3.0);
    if (!binary) {
      lp.lower[j] = -2.0;
      lp.upper[j] = 3.0;
    }
    z0[j] = binary ? (coin(rng) ? 1.0 : 0.0) : u(rng);
  }
  // x_c <= 2 + 3 y_b for the first min(nb, nc) pairs
  const int link = std::min(nb, nc);
  Matrix a = Matrix::Zero(q + link, n);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < n; ++j)
      if (coin(rng)) a(i, j) = 2.0 * u(rng);
  for (int k = 0; k < link; ++k) {
    a(q + k, nb + k) = 1.0;
    a(q + k, k) = -3.0;
  }
  lp.ineq_rhs = a * z0;
  for (int i = 0; i < q; ++i) lp.ineq_rhs[i] += slack(rng);
  for (int k = 0; k < link; ++k) lp.ineq_rhs[q + k] = 2.0;
  Matrix pf = Matrix::Zero(q + link, p);
  for (int i = 0; i < q; ++i)
    for (int k = 0; k < p; ++k) pf(i, k) = 0.5 * u(rng);
  lp.ineq_matrix = a.sparseView();
  lp.ineq_param = pf.sparseView();
  lp.eq_matrix.resize(0, n);
  lp.eq_rhs.resize(0);
  lp.eq_param.resize(0, p);
  for (int j = 0; j < nb; ++j) prob.integer_vars.push_back(j);
  return prob;
}

BatteryResult lp_gradient_battery(std::uint64_t seed, int count, double tol) {
  BatteryResult res;
  res.name = "lp cost gradient vs finite differences";
  res.tolerance = tol;
  const auto t0 = Clock::now();
  for (int k = 0; k < count; ++k) {
    const auto [lp, m] = lp_instance(seed, k);
    const auto sol = lp::solve_lp(lp, m);
    if (sol.status != lp::SolveStatus::kOptimal) {
      res.fail(fmt::format("instance {}: generated LP has no optimum", k));
      continue;
    }
    diffopt::FiniteDifference fd;
    try {
      fd = diffopt::finite_difference_gradient(lp, m);
    } catch (const OracleInapplicable&) {
      ++res.skipped;
      continue;
    }
    const auto g = diffopt::cost_gradient(lp, sol, m);
    ++res.instances;
    for (int i = 0; i < m.size(); ++i) {
      if (fd.kink[i]) {
        ++res.skipped;
        continue;
      }
      const double err = std::abs(g.dcost_dM[i] - fd.gradient[i]) / std::max(1.0, std::abs(fd.gradient[i]));
      res.worst = std::max(res.worst, err);
      ++res.checked;
      if (!(err < tol))
        res.fail(fmt::format("instance {} param {}: kkt {} fd {}", k, i, g.dcost_dM[i], fd.gradient[i]));
    }
  }
  res.seconds = since(t0);
  return res;
}

BatteryResult lp_envelope_battery(std::uint64_t seed, int count, double tol) {
  BatteryResult res;
  res.name = "lp cost gradient vs dual envelope";
  res.tolerance = tol;
  const auto t0 = Clock::now();
  for (int k = 0; k < count; ++k) {
    const auto [lp, m] = lp_instance(seed, k);
    const auto sol = lp::solve_lp(lp, m);
    if (sol.status != lp::SolveStatus::kOptimal || !nondegenerate(lp, sol, m)) {
      ++res.skipped;
      continue;
    }
    const auto g = diffopt::cost_gradient(lp, sol, m);
    if (g.degenerate) {
      res.fail(fmt::format("instance {}: nondegenerate optimum fell back to the envelope", k));
      continue;
    }
    ++res.instances;
    for (int i = 0; i < m.size(); ++i) {
      const double err = std::abs(g.dcost_dM[i] - g.envelope[i]);
      res.worst = std::max(res.worst, err);
      ++res.checked;
      if (!(err <= tol)) res.fail(fmt::format("instance {} param {}: error {:.3e}", k, i, err));
    }
  }
  res.seconds = since(t0);
  return res;
}

BatteryResult milp_enumeration_battery(std::uint64_t seed, int count, double tol) {
  BatteryResult res;
  res.name = "branch and bound vs enumeration";
  res.tolerance = tol;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nb(1, 10), nc(0, 8), nq(1, 6);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int attempt = 0; res.instances < count && attempt < 20 * count; ++attempt) {
    const auto prob = random_binary_milp(rng, nb(rng), nc(rng), nq(rng), 2);
    const Vector m{{u(rng), u(rng)}};
    const auto bb = milp::branch_and_bound(prob, m);
    const auto en = milp::enumerate_integer_assignments(prob, m);
    if (bb.status != en.status) {
      res.fail(fmt::format("attempt {}: status {} vs {}", attempt, milp::to_string(bb.status),
                           milp::to_string(en.status)));
      continue;
    }
    if (bb.status != milp::MilpStatus::kOptimal) {
      ++res.skipped;
      continue;
    }
    ++res.instances;
    ++res.checked;
    const double err = std::abs(bb.C_star - en.C_star);
    res.worst = std::max(res.worst, err);
    if (!(err <= tol)) res.fail(fmt::format("attempt {}: {} vs {}", attempt, bb.C_star, en.C_star));
  }
  if (res.instances < count) res.fail(fmt::format("only {} instances with an optimum", res.instances));
  res.seconds = since(t0);
  return res;
}

BatteryResult embedded_gradient_battery(std::uint64_t seed, int count, double tol) {
  BatteryResult res;
  res.name = "two-stage vs embedded MILP gradient";
  res.tolerance = tol;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int attempt = 0; res.instances < count && attempt < 20 * count; ++attempt) {
    const auto prob = random_binary_milp(rng, 6, 5, 5, 3);
    Vector m(3);
    for (int i = 0; i < 3; ++i) m[i] = u(rng);
    const auto bb = milp::branch_and_bound(prob, m);
    if (bb.status != milp::MilpStatus::kOptimal) {
      ++res.skipped;
      continue;
    }
    const auto two = milp::backward_optimal_subproblem(bb, m);
    const auto emb = milp::embedded_gradient(prob, m);
    ++res.instances;
    auto compare = [&](const Matrix& a, const Matrix& b, const char* what) {
      if (a.rows() != b.rows() || a.cols() != b.cols()) {
        res.fail(fmt::format("attempt {}: {} shapes differ", attempt, what));
        return;
      }
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double err = std::abs(a.data()[i] - b.data()[i]);
        res.worst = std::max(res.worst, err);
        ++res.checked;
        if (!(err <= tol)) res.fail(fmt::format("attempt {} {}[{}]: error {:.3e}", attempt, what, i, err));
      }
    };
    compare(two.dcost_dM, emb.dcost_dM, "dC/dM");
    compare(two.dz_dM, emb.dz_dM, "dz/dM");
  }
  if (res.instances < count) res.fail(fmt::format("only {} instances with an optimum", res.instances));
  res.seconds = since(t0);
  return res;
}

BatteryResult lstm_bptt_battery(std::uint64_t seed, int count, double tol) {
  using namespace forecast;
  BatteryResult res;
  res.name = "lstm bptt vs finite differences";
  res.tolerance = tol;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> hid(1, 8), win(1, 12), dim(1, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // |head| < 1 + sqrt(8) at these initializations, so every output stays
  // above the zero clamp.
  const OutputScale out{2.0, 0.5};
  const double h = 1e-4;
  for (int k = 0; k < count; ++k) {
    const auto p = LstmParams::random(dim(rng), hid(rng), rng());
    Matrix w(win(rng), p.input_dim);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    Vector r(kHorizon);
    for (int j = 0; j < kHorizon; ++j) r[j] = u(rng);

    const Vector g = backward_day(forward_day(w, p, out), p, r).flatten();
    const Vector base = p.flatten();
    LstmParams q = p;
    auto value = [&](int i, double step) {
      Vector x = base;
      x[i] += step;
      q.assign(x);
      return forward_day(w, q, out).forecast.dot(r);
    };
    ++res.instances;
    for (int i = 0; i < base.size(); ++i) {
      const double fd = (-value(i, 2 * h) + 8 * value(i, h) - 8 * value(i, -h) + value(i, -2 * h)) / (12 * h);
      const double err = std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-6});
      res.worst = std::max(res.worst, err);
      ++res.checked;
      if (!(err < tol))
        res.fail(fmt::format("config {} (hidden {}, window {}) param {}: bptt {} fd {}", k, p.hidden_size, w.rows(),
                             i, g[i], fd));
    }
  }
  res.seconds = since(t0);
  return res;
}

std::vector<BatteryResult> all_batteries(std::uint64_t seed) {
  return {lp_gradient_battery(seed), lp_envelope_battery(seed), milp_enumeration_battery(seed),
          embedded_gradient_battery(seed), lstm_bptt_battery(seed)};
}

}  // namespace mesval::harness
