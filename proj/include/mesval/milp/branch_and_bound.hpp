#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "mesval/diffopt/sensitivity.hpp"
#include "mesval/lp/simplex.hpp"

namespace mesval::milp {

using lp::LPSolution;
using lp::LPStandardForm;
using lp::Vector;

struct MILPProblem {
  LPStandardForm base;
  std::vector<int> integer_vars;  // binaries are integers with bounds [0, 1]

  /// Throws InvalidInput when an integer index is out of range, repeated,
  /// or has an infinite bound.
  void validate() const;
};

struct BranchDecision {
  int var = 0;
  bool ceil_side = false;  // false: z_var <= bound, true: z_var >= bound
  double bound = 0.0;
};

struct SearchNode {
  std::vector<BranchDecision> trail;
  int depth = 0;
  Vector lower;  // bounds in force at this node
  Vector upper;
};

enum class MilpStatus { kOptimal, kInfeasible, kUnbounded };

std::string to_string(MilpStatus s);

struct MILPResult {
  MilpStatus status = MilpStatus::kInfeasible;
  double C_star = 0.0;
  Vector z_star;
  SearchNode P_star;
  LPStandardForm lp_star;   // LP(P*): the base LP with P*'s bounds
  LPSolution lp_solution;   // its optimal solution, as found during the search
  long node_count = 0;
  long lp_iterations = 0;
  std::vector<double> incumbents;  // accepted incumbent objectives, in order
  // Smallest LP bound among nodes discarded because of the incumbent.
  double min_pruned_bound = lp::kInf;
};

struct BnbOptions {
  double int_tol = 1e-6;
  long max_nodes = 100000;
  lp::SimplexOptions lp;
  // Re-solve child nodes from the parent's optimal basis with the dual
  // simplex instead of from scratch.
  bool warm_start = false;
  // Optional basis shared across calls on problems of identical structure:
  // the root LP starts from it (dual simplex) when it is non-empty, and the
  // root's optimal basis is written back.
  lp::BasisState* root_basis = nullptr;
  std::ostream* node_log = nullptr;
  // Called after every incumbent update with the new incumbent state.
  std::function<void(const MILPResult&)> on_incumbent;
};

/// Depth-first branch and bound over LP relaxations. A node is discarded
/// when its LP is infeasible or its bound is not strictly below the
/// incumbent; integral LP optima become incumbents; otherwise the node
/// branches on the lowest-index fractional integer variable, exploring the
/// floor side first. Throws LimitExceeded beyond `max_nodes`.
MILPResult branch_and_bound(const MILPProblem& problem, const Vector& params, const BnbOptions& opts = {});

/// Gradient of C* through LP(P*): the integer variables stay continuous and
/// are held by the bounds of the winning node.
diffopt::GradientResult backward_optimal_subproblem(const MILPResult& result, const Vector& params,
                                                    const diffopt::SensitivityOptions& opts = {});

/// Same search, differentiating LP(P) at every incumbent update and keeping
/// the last one. Must agree with the two-stage result.
diffopt::GradientResult embedded_gradient(const MILPProblem& problem, const Vector& params,
                                          const BnbOptions& opts = {},
                                          const diffopt::SensitivityOptions& sens = {});

struct EnumerationResult {
  MilpStatus status = MilpStatus::kInfeasible;
  double C_star = 0.0;
  Vector z_star;
  long assignments = 0;
};

/// Brute force over all binary assignments in lexicographic order (first
/// integer variable most significant), keeping the first strict minimum.
/// Requires at most 20 binaries.
EnumerationResult enumerate_integer_assignments(const MILPProblem& problem, const Vector& params,
                                                const lp::SimplexOptions& opts = {});

}  // namespace mesval::milp
