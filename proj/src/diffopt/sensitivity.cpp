#include "mesval/diffopt/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::diffopt {

namespace {

constexpr const char* kModule = "diff_opt";
using lp::Triplet;

// Factorization of the reduced, equilibrated KKT matrix behind one
// interface, dense or sparse depending on size.
class ReducedSolver {
 public:
  ReducedSolver(const SparseMatrix& k, bool dense) : dense_(dense) {
    if (dense_) {
      dense_lu_.compute(Matrix(k));
      ok_ = true;
    } else {
      sparse_lu_.compute(k);
      ok_ = sparse_lu_.info() == Eigen::Success;
    }
  }

  bool ok() const { return ok_; }

  Matrix solve(const Matrix& rhs) {
    if (dense_) return dense_lu_.solve(rhs);
    return sparse_lu_.solve(rhs);
  }

 private:
  bool dense_;
  bool ok_ = false;
  Eigen::PartialPivLU<Matrix> dense_lu_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> sparse_lu_;
};

double norm1(const SparseMatrix& k) {
  double best = 0.0;
  for (int j = 0; j < k.outerSize(); ++j) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(k, j); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

// Hager's estimate of ||K^{-1}||_1 for a symmetric K.
double inverse_norm1_estimate(ReducedSolver& solver, int dim) {
  if (dim == 0) return 0.0;
  Vector x = Vector::Constant(dim, 1.0 / dim);
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const Vector y = solver.solve(x);
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    estimate = y.lpNorm<1>();
    Vector xi(dim);
    for (int i = 0; i < dim; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    const Vector z = solver.solve(xi);
    if (!z.allFinite()) return std::numeric_limits<double>::infinity();
    int j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (iter > 0 && zmax <= z.dot(x)) break;
    x.setZero();
    x[j] = 1.0;
  }
  return estimate;
}

// Symmetric Ruiz scaling: returns s with max_j |s_i K_ij s_j| close to 1.
Vector equilibrate(const SparseMatrix& k) {
  const int dim = static_cast<int>(k.rows());
  Vector s = Vector::Ones(dim);
  for (int pass = 0; pass < 8; ++pass) {
    Vector row_max = Vector::Zero(dim);
    for (int j = 0; j < k.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(k, j); it; ++it) {
        const double v = std::abs(it.value()) * s[it.row()] * s[j];
        row_max[it.row()] = std::max(row_max[it.row()], v);
      }
    bool done = true;
    for (int i = 0; i < dim; ++i) {
      if (row_max[i] <= 0.0) continue;
      if (std::abs(row_max[i] - 1.0) > 1e-3) done = false;
      s[i] /= std::sqrt(row_max[i]);
    }
    if (done) break;
  }
  return s;
}

struct ReducedSystem {
  SparseMatrix k;
  Matrix rhs;
  std::vector<int> active;  // folded inequality rows with nonzero multiplier
};

// Rows with lambda_i = 0 read f_i dlambda_i = 0, so dlambda_i = 0 and the
// row drops out (for f_i = 0 too, which is the damped limit). Remaining
// inequality rows are divided by lambda_i, giving the symmetric system
//
//   [ 0    A_a'           A_h' ] [dz ]   [ 0   ]
//   [ A_a  diag(f_a/l_a)  0    ] [dla] = [ B_a ]
//   [ A_h  0              0    ] [dmu]   [ B_h ]
//
// whose right-hand side is -G_M after the same row scaling.
ReducedSystem reduce(const KktJacobians& jac, double damping) {
  ReducedSystem out;
  for (int i = 0; i < jac.q; ++i)
    if (jac.lambda[i] != 0.0) out.active.push_back(i);
  const int a = static_cast<int>(out.active.size());
  const int dim = jac.n + a + jac.r;
  std::vector<int> slot(jac.q, -1);
  for (int k = 0; k < a; ++k) slot[out.active[k]] = k;

  std::vector<Triplet> t;
  for (int j = 0; j < jac.ineq_matrix.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(jac.ineq_matrix, j); it; ++it) {
      const int k = slot[it.row()];
      if (k < 0 || it.value() == 0.0) continue;
      t.emplace_back(j, jac.n + k, it.value());
      t.emplace_back(jac.n + k, j, it.value());
    }
  for (int j = 0; j < jac.eq_matrix.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(jac.eq_matrix, j); it; ++it) {
      if (it.value() == 0.0) continue;
      t.emplace_back(j, jac.n + a + static_cast<int>(it.row()), it.value());
      t.emplace_back(jac.n + a + static_cast<int>(it.row()), j, it.value());
    }
  for (int k = 0; k < a; ++k) {
    const int i = out.active[k];
    const double d = jac.f[i] / jac.lambda[i];
    if (d != 0.0) t.emplace_back(jac.n + k, jac.n + k, d);
  }
  if (damping > 0.0) {
    // Primal-dual damping keeps the saddle-point matrix quasi-definite.
    for (int i = 0; i < jac.n; ++i) t.emplace_back(i, i, damping);
    for (int i = jac.n; i < dim; ++i) t.emplace_back(i, i, -damping);
  }
  out.k.resize(dim, dim);
  out.k.setFromTriplets(t.begin(), t.end());
  out.k.makeCompressed();

  out.rhs = Matrix::Zero(dim, jac.p);
  for (int c = 0; c < jac.ineq_param.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(jac.ineq_param, c); it; ++it) {
      const int k = slot[it.row()];
      if (k >= 0) out.rhs(jac.n + k, c) = it.value();
    }
  for (int c = 0; c < jac.eq_param.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(jac.eq_param, c); it; ++it)
      out.rhs(jac.n + a + it.row(), c) = it.value();
  return out;
}

struct Attempt {
  bool ok = false;
  double conditioning = std::numeric_limits<double>::infinity();
  Matrix solution;
};

Attempt attempt(const ReducedSystem& sys, const SensitivityOptions& opts) {
  Attempt out;
  const int dim = static_cast<int>(sys.k.rows());
  const Vector s = equilibrate(sys.k);
  SparseMatrix scaled = s.asDiagonal() * sys.k * s.asDiagonal();
  scaled.makeCompressed();
  ReducedSolver solver(scaled, dim <= opts.dense_limit);
  if (!solver.ok()) return out;
  out.conditioning = norm1(scaled) * inverse_norm1_estimate(solver, dim);
  if (!std::isfinite(out.conditioning) || out.conditioning > opts.condition_limit) return out;
  out.solution = s.asDiagonal() * solver.solve(s.asDiagonal() * sys.rhs);
  out.ok = out.solution.allFinite();
  return out;
}

}  // namespace

Vector kkt_residual(const LPStandardForm& lp, const Vector& params, const Vector& z, const Vector& lambda,
                    const Vector& mu) {
  const LPStandardForm folded = lp::fold_bounds(lp);
  const int n = lp.n_vars, q = folded.num_ineq(), r = lp.num_eq();
  if (z.size() != n || lambda.size() != q || mu.size() != r)
    throw InvalidInput(kModule, "residual map received vectors of the wrong size");
  Vector g(n + q + r);
  g.head(n) = lp.cost + folded.ineq_matrix.transpose() * lambda + folded.eq_matrix.transpose() * mu;
  g.segment(n, q) = lambda.cwiseProduct(folded.ineq_values(z, params));
  g.tail(r) = folded.eq_values(z, params);
  return g;
}

KktJacobians assemble_kkt_jacobians(const LPStandardForm& lp, const LPSolution& sol, const Vector& params) {
  if (sol.status != lp::SolveStatus::kOptimal)
    throw InvalidInput(kModule, "KKT Jacobians need an optimal solution, got " + lp::to_string(sol.status));
  const LPStandardForm folded = lp::fold_bounds(lp);
  KktJacobians jac;
  jac.n = lp.n_vars;
  jac.q = folded.num_ineq();
  jac.r = lp.num_eq();
  jac.p = lp.param_dim;
  if (sol.primal.size() != jac.n || sol.ineq_duals.size() != jac.q || sol.eq_duals.size() != jac.r)
    throw InvalidInput(kModule, fmt::format("solution sizes ({}, {}, {}) do not match the LP ({}, {}, {})",
                                            sol.primal.size(), sol.ineq_duals.size(), sol.eq_duals.size(), jac.n,
                                            jac.q, jac.r));
  if (params.size() != jac.p) throw InvalidInput(kModule, "parameter vector length does not match the LP");

  jac.ineq_matrix = folded.ineq_matrix;
  jac.eq_matrix = folded.eq_matrix;
  jac.ineq_param = folded.ineq_param;
  jac.eq_param = folded.eq_param;
  jac.lambda = sol.ineq_duals;
  jac.mu = sol.eq_duals;
  jac.f = folded.ineq_values(sol.primal, params);

  const int n = jac.n, q = jac.q;
  std::vector<Triplet> gz;
  for (int j = 0; j < jac.ineq_matrix.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(jac.ineq_matrix, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      gz.emplace_back(j, n + i, it.value());
      const double v = jac.lambda[i] * it.value();
      if (v != 0.0) gz.emplace_back(n + i, j, v);
    }
  for (int j = 0; j < jac.eq_matrix.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(jac.eq_matrix, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      gz.emplace_back(j, n + q + i, it.value());
      gz.emplace_back(n + q + i, j, it.value());
    }
  for (int i = 0; i < q; ++i)
    if (jac.f[i] != 0.0) gz.emplace_back(n + i, n + i, jac.f[i]);
  const int dim = n + q + jac.r;
  jac.G_z.resize(dim, dim);
  jac.G_z.setFromTriplets(gz.begin(), gz.end());

  // df/dM = -db_f/dM and dh/dM = -db_h/dM; the stationarity rows do not
  // depend on M because the objective does not.
  std::vector<Triplet> gm;
  for (int c = 0; c < jac.ineq_param.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(jac.ineq_param, c); it; ++it) {
      const double v = -jac.lambda[it.row()] * it.value();
      if (v != 0.0) gm.emplace_back(n + it.row(), c, v);
    }
  for (int c = 0; c < jac.eq_param.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(jac.eq_param, c); it; ++it)
      gm.emplace_back(n + q + it.row(), c, -it.value());
  jac.G_M.resize(dim, jac.p);
  jac.G_M.setFromTriplets(gm.begin(), gm.end());
  return jac;
}

Sensitivity solution_sensitivity(KktJacobians& jac, const SensitivityOptions& opts) {
  Sensitivity out;
  bool pinned_degenerate = false;
  for (int i = 0; i < jac.q; ++i)
    if (jac.lambda[i] == 0.0 && jac.f[i] == 0.0) pinned_degenerate = true;

  ReducedSystem sys = reduce(jac, 0.0);
  Attempt att = attempt(sys, opts);
  double applied = pinned_degenerate ? opts.damping : 0.0;
  if (!att.ok) {
    sys = reduce(jac, opts.damping);
    att = attempt(sys, opts);
    applied = opts.damping;
    if (!att.ok) {
      jac.regularization = applied;
      throw DegenerateSolutionError(
          kModule, fmt::format("KKT system condition estimate {:.3e} exceeds {:.1e} after damping; use the dual "
                               "subgradient",
                               att.conditioning, opts.condition_limit));
    }
  }
  jac.regularization = applied;
  out.regularization = applied;
  out.conditioning = att.conditioning;

  const int a = static_cast<int>(sys.active.size());
  out.dz_dM = att.solution.topRows(jac.n);
  out.dlambda_dM = Matrix::Zero(jac.q, jac.p);
  for (int k = 0; k < a; ++k) out.dlambda_dM.row(sys.active[k]) = att.solution.row(jac.n + k);
  out.dmu_dM = att.solution.bottomRows(jac.r);

  Matrix full(jac.n + jac.q + jac.r, jac.p);
  full << out.dz_dM, out.dlambda_dM, out.dmu_dM;
  const Matrix res = jac.G_z * full + Matrix(jac.G_M);
  out.residual = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

Vector envelope_gradient(const LPStandardForm& lp, const LPSolution& sol) {
  const int q = lp.num_ineq();
  // Folded bound rows carry no parameter dependence, so only the original
  // rows contribute.
  Vector g = -(lp.ineq_param.transpose() * sol.ineq_duals.head(q));
  g -= lp.eq_param.transpose() * sol.eq_duals;
  return g;
}

GradientResult cost_gradient(const LPStandardForm& lp, const LPSolution& sol, const Vector& params,
                             const SensitivityOptions& opts, bool fallback) {
  KktJacobians jac = assemble_kkt_jacobians(lp, sol, params);
  GradientResult out;
  out.envelope = envelope_gradient(lp, sol);
  try {
    const Sensitivity s = solution_sensitivity(jac, opts);
    out.dz_dM = s.dz_dM;
    out.dcost_dM = s.dz_dM.transpose() * lp.cost;
    out.conditioning = s.conditioning;
    out.regularization = s.regularization;
  } catch (const DegenerateSolutionError&) {
    if (!fallback) throw;
    out.degenerate = true;
    out.dz_dM = Matrix::Zero(lp.n_vars, lp.param_dim);
    out.dcost_dM = out.envelope;
    out.conditioning = std::numeric_limits<double>::infinity();
    out.regularization = jac.regularization;
  }
  return out;
}

bool FiniteDifference::any_kink() const { return std::find(kink.begin(), kink.end(), true) != kink.end(); }

FiniteDifference finite_difference(const std::function<std::optional<double>(const Vector&)>& value,
                                   const Vector& params, double step) {
  if (!(step > 0.0)) throw InvalidInput(kModule, "finite-difference step must be positive");
  const auto center = value(params);
  if (!center) throw OracleInapplicable(kModule, "problem not solvable at the base point");
  const int p = static_cast<int>(params.size());
  FiniteDifference out;
  out.gradient.resize(p);
  out.left.resize(p);
  out.right.resize(p);
  out.kink.assign(p, false);
  for (int k = 0; k < p; ++k) {
    Vector plus = params, minus = params;
    plus[k] += step;
    minus[k] -= step;
    const auto up = value(plus);
    const auto down = value(minus);
    if (!up || !down)
      throw OracleInapplicable(kModule, fmt::format("problem not solvable after perturbing parameter {}", k));
    out.right[k] = (*up - *center) / step;
    out.left[k] = (*center - *down) / step;
    // Round-off in the three objective values is amplified by 1/step.
    const double noise = 1e-10 * (1.0 + std::abs(*center)) / step;
    const double scale = std::max({1.0, std::abs(out.left[k]), std::abs(out.right[k])});
    out.kink[k] = std::abs(out.left[k] - out.right[k]) > 1e-6 * scale + noise;
    out.gradient[k] = out.kink[k] ? std::numeric_limits<double>::quiet_NaN() : (*up - *down) / (2.0 * step);
  }
  return out;
}

FiniteDifference finite_difference_gradient(const LPStandardForm& lp, const Vector& params, double step) {
  return finite_difference(
      [&lp](const Vector& m) -> std::optional<double> {
        const auto sol = lp::solve_lp(lp, m);
        if (sol.status != lp::SolveStatus::kOptimal) return std::nullopt;
        return sol.objective;
      },
      params, step);
}

}  // namespace mesval::diffopt
