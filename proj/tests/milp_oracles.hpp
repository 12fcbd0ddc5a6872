#pragma once

#include <random>

#include <Eigen/Dense>

#include "mesval/milp/branch_and_bound.hpp"

namespace oracle {

// Random MILP with `nb` binaries followed by `nc` boxed continuous
// variables. Constraints are built around a random integral point so at
// least one assignment is feasible at M = 0; continuous variables are
// linked to binaries through on/off capacity rows.
inline mesval::milp::MILPProblem random_milp(std::mt19937_64& rng, int nb, int nc, int q, int p) {
  using mesval::lp::Matrix;
  using mesval::lp::Vector;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.1, 1.0);
  std::bernoulli_distribution coin(0.5);
  const int n = nb + nc;
  mesval::milp::MILPProblem prob;
  auto& lp = prob.base;
  lp.n_vars = n;
  lp.param_dim = p;
  lp.cost.resize(n);
  for (int j = 0; j < nb; ++j) lp.cost[j] = u(rng) * 2.0;
  for (int j = nb; j < n; ++j) lp.cost[j] = u(rng) * 3.0;
  lp.lower = Vector::Zero(n);
  lp.upper = Vector::Ones(n);
  for (int j = nb; j < n; ++j) {
    lp.lower[j] = -2.0;
    lp.upper[j] = 3.0;
  }
  Vector z0(n);
  for (int j = 0; j < nb; ++j) z0[j] = coin(rng) ? 1.0 : 0.0;
  for (int j = nb; j < n; ++j) z0[j] = u(rng);

  const int link = std::min(nb, nc);
  const int rows = q + link;
  Matrix a = Matrix::Zero(rows, n);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < n; ++j)
      if (coin(rng)) a(i, j) = u(rng) * 2.0;
  // x_c <= 2 + 3 y_b pairs
  for (int k = 0; k < link; ++k) {
    a(q + k, nb + k) = 1.0;
    a(q + k, k) = -3.0;
  }
  lp.ineq_rhs = a * z0;
  for (int i = 0; i < q; ++i) lp.ineq_rhs[i] += pos(rng) * 0.5;
  for (int k = 0; k < link; ++k) lp.ineq_rhs[q + k] = 2.0;
  Matrix pf = Matrix::Zero(rows, p);
  for (int i = 0; i < q; ++i)
    for (int k = 0; k < p; ++k) pf(i, k) = u(rng) * 0.5;
  lp.ineq_matrix = a.sparseView();
  lp.ineq_param = pf.sparseView();
  lp.eq_matrix.resize(0, n);
  lp.eq_rhs.resize(0);
  lp.eq_param.resize(0, p);
  for (int j = 0; j < nb; ++j) prob.integer_vars.push_back(j);
  return prob;
}

}  // namespace oracle
