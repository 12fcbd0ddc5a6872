#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mesval/lp/standard_form.hpp"

namespace mesval::lp {

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded };

std::string to_string(SolveStatus s);

enum class PivotRule {
  kBland,    // lowest eligible index, for both entering and leaving choices
  kDantzig,  // most negative reduced cost; falls back to Bland on degenerate stalls
};

struct SimplexOptions {
  PivotRule pivot_rule = PivotRule::kBland;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  // Smallest |alpha| the ratio test accepts as a pivot candidate.
  double ratio_tol = 1e-9;
  int refactor_interval = 80;
  long max_iterations = 5'000'000;
  // Consecutive degenerate pivots after which kDantzig switches to Bland.
  int degenerate_switch = 40;
};

/// Result of an LP solve. Dual multipliers follow the row order of
/// `fold_bounds(lp)`: the original inequality rows first, then one row per
/// finite variable bound. All multipliers of inactive rows are exactly zero.
struct LPSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  Vector primal;
  Vector ineq_duals;  // lambda >= 0
  Vector eq_duals;    // mu, free
  double objective = 0.0;
  // Basic columns of the final basis. Column j < n is structural, n + i is
  // the logical (slack) of constraint row i, inequality rows first.
  std::vector<int> basis;
  long iterations = 0;
};

/// Snapshot of a simplex basis that can seed a later solve of the same LP
/// with different variable bounds.
struct BasisState {
  std::vector<int> head;          // basic column per row position
  std::vector<signed char> flag;  // per column: 0 basic, -1 at lower, +1 at upper, 2 free at zero
  bool empty() const { return head.empty(); }
};

/// Bounded-variable revised simplex. The basis inverse is held as a sparse
/// LU factorization plus a product-form eta file that is rebuilt every
/// `refactor_interval` pivots.
class SimplexEngine {
 public:
  SimplexEngine(const LPStandardForm& lp, const Vector& params, SimplexOptions opts = {});
  ~SimplexEngine();
  SimplexEngine(SimplexEngine&&) noexcept;
  SimplexEngine& operator=(SimplexEngine&&) noexcept;

  /// Primal simplex from the all-logical basis.
  SolveStatus solve();

  /// Re-solve after bound changes starting from the current (or loaded)
  /// basis. Runs the dual simplex when the basis is dual feasible and falls
  /// back to the primal method otherwise.
  SolveStatus resolve();

  void set_bounds(int j, double lower, double upper);
  void reset_bounds();

  BasisState basis_state() const;
  void load_basis(const BasisState& state);

  LPSolution solution() const;
  long iterations() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot solve from the all-logical basis.
LPSolution solve_lp(const LPStandardForm& lp, const Vector& params, const SimplexOptions& opts = {});

struct KktReport {
  double primal_ineq = 0.0;      // max(0, max_i f_i)
  double primal_eq = 0.0;        // max |h_i|
  double stationarity = 0.0;     // max |c + A_f' lambda + A_h' mu|
  double dual_sign = 0.0;        // max(0, -min lambda)
  double complementarity = 0.0;  // max |lambda_i f_i|
  double duality_gap = 0.0;      // |primal objective - dual objective|

  /// All residuals within `tol * (1 + |objective|)`.
  bool ok(double tol, double objective) const;
};

/// KKT residuals of a candidate primal-dual pair. `ineq_duals` follow the
/// folded row order (see `LPSolution`).
KktReport check_kkt(const LPStandardForm& lp, const Vector& params, const Vector& primal, const Vector& ineq_duals,
                    const Vector& eq_duals);

/// Dual objective -lambda' b_f(M) - mu' b_h(M) + c0 over the folded rows.
double dual_objective(const LPStandardForm& lp, const Vector& params, const Vector& ineq_duals, const Vector& eq_duals);

}  // namespace mesval::lp
