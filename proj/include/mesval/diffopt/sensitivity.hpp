#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mesval/lp/simplex.hpp"
#include "mesval/lp/standard_form.hpp"

namespace mesval::diffopt {

using lp::LPSolution;
using lp::LPStandardForm;
using lp::Matrix;
using lp::SparseMatrix;
using lp::Vector;

/// Jacobians of the KKT residual map
///
///   G(z, lambda, mu; M) = [ c + A_f' lambda + A_h' mu ;
///                           diag(lambda) f(z, M)      ;
///                           h(z, M)                   ]
///
/// at an optimal primal-dual point. Inequalities are the folded rows of
/// `lp` (variable bounds included), so q counts bound rows too.
struct KktJacobians {
  int n = 0;  // variables
  int q = 0;  // folded inequality rows
  int r = 0;  // equality rows
  int p = 0;  // parameters

  SparseMatrix G_z;  // (n+q+r) square: [0 A_f' A_h'; diag(lambda) A_f diag(f) 0; A_h 0 0]
  SparseMatrix G_M;  // (n+q+r) x p:    [0; diag(lambda) df/dM; dh/dM]

  // Pieces the blocks were built from.
  SparseMatrix ineq_matrix;  // A_f of the folded rows
  SparseMatrix eq_matrix;    // A_h
  SparseMatrix ineq_param;   // db_f/dM of the folded rows
  SparseMatrix eq_param;     // db_h/dM
  Vector lambda;
  Vector mu;
  Vector f;

  // Damping actually applied by the last sensitivity solve (0 if none).
  double regularization = 0.0;
};

struct SensitivityOptions {
  double damping = 1e-10;
  double condition_limit = 1e12;
  // Systems up to this size use a dense LU, larger ones a sparse LU.
  int dense_limit = 400;
};

struct Sensitivity {
  Matrix dz_dM;       // n x p
  Matrix dlambda_dM;  // q x p
  Matrix dmu_dM;      // r x p
  double conditioning = 0.0;
  double regularization = 0.0;
  double residual = 0.0;  // max |G_z X + G_M|
};

struct GradientResult {
  Matrix dz_dM;      // n x p
  Vector dcost_dM;   // p, = c' dz_dM unless `degenerate`
  Vector envelope;   // p, dual sensitivity lambda' df/dM + mu' dh/dM
  double conditioning = 0.0;
  double regularization = 0.0;
  // The KKT system was too ill-conditioned even after damping; dcost_dM
  // holds the envelope subgradient and dz_dM is zero.
  bool degenerate = false;
};

/// Residual map G at an arbitrary point (used to check the Jacobians).
Vector kkt_residual(const LPStandardForm& lp, const Vector& params, const Vector& z, const Vector& lambda,
                    const Vector& mu);

/// Throws InvalidInput if `sol` is not optimal or its sizes do not match `lp`.
KktJacobians assemble_kkt_jacobians(const LPStandardForm& lp, const LPSolution& sol, const Vector& params);

/// Solves G_z X = -G_M. Rows whose multiplier is exactly zero decouple
/// (their multiplier derivative is zero); the remaining system is
/// equilibrated and solved by LU, with damping when it is singular. Throws
/// DegenerateSolutionError when the damped system is still worse
/// conditioned than `condition_limit`.
Sensitivity solution_sensitivity(KktJacobians& jac, const SensitivityOptions& opts = {});

/// dC*/dM through the KKT sensitivity. When the sensitivity is degenerate
/// and `fallback` is set, returns the envelope subgradient flagged as such;
/// otherwise DegenerateSolutionError propagates.
GradientResult cost_gradient(const LPStandardForm& lp, const LPSolution& sol, const Vector& params,
                             const SensitivityOptions& opts = {}, bool fallback = true);

/// Dual-based sensitivity of the optimal cost: since M enters right-hand
/// sides only, dC*/dM = lambda' df/dM + mu' dh/dM = -(lambda' db_f/dM + mu' db_h/dM).
Vector envelope_gradient(const LPStandardForm& lp, const LPSolution& sol);

struct FiniteDifference {
  Vector gradient;          // central differences, NaN where a kink was detected
  Vector left, right;       // one-sided estimates
  std::vector<bool> kink;   // left and right disagree
  bool any_kink() const;
};

/// Central, left and right differences of a scalar function of M. `value`
/// returns nullopt where it cannot be evaluated, which raises
/// OracleInapplicable.
FiniteDifference finite_difference(const std::function<std::optional<double>(const Vector&)>& value,
                                   const Vector& params, double step = 1e-5);

/// Finite differences of the optimal LP cost by re-solving at M +- h e_k.
FiniteDifference finite_difference_gradient(const LPStandardForm& lp, const Vector& params, double step = 1e-5);

}  // namespace mesval::diffopt
