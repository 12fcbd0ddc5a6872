#include "mesval/milp/branch_and_bound.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::milp {

namespace {

constexpr const char* kModule = "milp";

struct OpenNode {
  SearchNode node;
  lp::BasisState parent_basis;
};

std::string trail_text(const SearchNode& node) {
  std::string out = "[";
  for (std::size_t k = 0; k < node.trail.size(); ++k) {
    const auto& d = node.trail[k];
    out += fmt::format("{}z{}{}{:g}", k ? " " : "", d.var, d.ceil_side ? ">=" : "<=", d.bound);
  }
  return out + "]";
}

bool basis_fits(const lp::BasisState& b, const LPStandardForm& lp) {
  const int m = lp.num_ineq() + lp.num_eq();
  return !b.empty() && static_cast<int>(b.head.size()) == m && static_cast<int>(b.flag.size()) == lp.n_vars + m;
}

}  // namespace

std::string to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::kOptimal: return "optimal";
    case MilpStatus::kInfeasible: return "infeasible";
    case MilpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

void MILPProblem::validate() const {
  base.validate();
  std::vector<char> seen(base.n_vars, 0);
  for (int j : integer_vars) {
    if (j < 0 || j >= base.n_vars) throw InvalidInput(kModule, fmt::format("integer index {} out of range", j));
    if (seen[j]) throw InvalidInput(kModule, fmt::format("integer index {} listed twice", j));
    seen[j] = 1;
    if (!std::isfinite(base.lower[j]) || !std::isfinite(base.upper[j]))
      throw InvalidInput(kModule, fmt::format("integer variable {} needs finite bounds", j));
  }
}

MILPResult branch_and_bound(const MILPProblem& problem, const Vector& params, const BnbOptions& opts) {
  problem.validate();
  std::vector<int> ints = problem.integer_vars;
  std::sort(ints.begin(), ints.end());

  lp::SimplexEngine engine(problem.base, params, opts.lp);
  MILPResult result;
  result.C_star = lp::kInf;
  bool have_incumbent = false;

  std::vector<OpenNode> stack;
  {
    OpenNode root;
    root.node.lower = problem.base.lower;
    root.node.upper = problem.base.upper;
    stack.push_back(std::move(root));
  }

  while (!stack.empty()) {
    OpenNode open = std::move(stack.back());
    stack.pop_back();
    if (result.node_count >= opts.max_nodes)
      throw LimitExceeded(kModule, fmt::format("branch and bound exceeded {} nodes", opts.max_nodes));
    ++result.node_count;
    const SearchNode& node = open.node;

    for (int j = 0; j < problem.base.n_vars; ++j) engine.set_bounds(j, node.lower[j], node.upper[j]);
    lp::SolveStatus status;
    const bool root = result.node_count == 1;
    if (opts.warm_start && !open.parent_basis.empty()) {
      engine.load_basis(open.parent_basis);
      status = engine.resolve();
    } else if (root && opts.root_basis && basis_fits(*opts.root_basis, problem.base)) {
      engine.load_basis(*opts.root_basis);
      status = engine.resolve();
    } else {
      status = engine.solve();
    }
    if (root && opts.root_basis && status == lp::SolveStatus::kOptimal) *opts.root_basis = engine.basis_state();

    auto log = [&](const std::string& bound, const std::string& action) {
      if (opts.node_log)
        *opts.node_log << fmt::format("node {} depth {} trail {} bound {} action {}\n", result.node_count,
                                      node.depth, trail_text(node), bound, action);
    };

    if (status == lp::SolveStatus::kUnbounded) {
      log("-inf", "unbounded");
      result.status = MilpStatus::kUnbounded;
      result.lp_iterations = engine.iterations();
      return result;
    }
    if (status == lp::SolveStatus::kInfeasible) {
      log("infeasible", "discard");
      continue;
    }

    LPSolution sol = engine.solution();
    const double c_lp = sol.objective;
    if (!(c_lp < result.C_star)) {
      result.min_pruned_bound = std::min(result.min_pruned_bound, c_lp);
      log(fmt::format("{:.10g}", c_lp), "discard");
      continue;
    }

    int branch_var = -1;
    for (int j : ints) {
      const double v = sol.primal[j];
      if (std::abs(v - std::round(v)) > opts.int_tol) {
        branch_var = j;
        break;
      }
    }

    if (branch_var < 0) {
      log(fmt::format("{:.10g}", c_lp), "incumbent");
      have_incumbent = true;
      result.C_star = c_lp;
      result.z_star = sol.primal;
      result.P_star = node;
      result.lp_star = lp::with_bounds(problem.base, node.lower, node.upper);
      result.lp_solution = std::move(sol);
      result.incumbents.push_back(c_lp);
      result.status = MilpStatus::kOptimal;
      if (opts.on_incumbent) opts.on_incumbent(result);
      continue;
    }

    log(fmt::format("{:.10g}", c_lp), fmt::format("branch z{}={:.6g}", branch_var, sol.primal[branch_var]));
    const double v = sol.primal[branch_var];
    lp::BasisState basis;
    if (opts.warm_start) basis = engine.basis_state();

    OpenNode left, right;
    left.node = node;
    left.node.depth = node.depth + 1;
    left.node.upper[branch_var] = std::floor(v);
    left.node.trail.push_back({branch_var, false, std::floor(v)});
    right.node = node;
    right.node.depth = node.depth + 1;
    right.node.lower[branch_var] = std::ceil(v);
    right.node.trail.push_back({branch_var, true, std::ceil(v)});
    left.parent_basis = basis;
    right.parent_basis = std::move(basis);
    // Last pushed is popped first: the floor side is explored first.
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }

  result.lp_iterations = engine.iterations();
  if (!have_incumbent) {
    result.status = MilpStatus::kInfeasible;
    result.C_star = lp::kInf;
  }
  return result;
}

diffopt::GradientResult backward_optimal_subproblem(const MILPResult& result, const Vector& params,
                                                    const diffopt::SensitivityOptions& opts) {
  if (result.status != MilpStatus::kOptimal)
    throw InvalidInput(kModule, "backward pass needs an optimal MILP result, got " + to_string(result.status));
  return diffopt::cost_gradient(result.lp_star, result.lp_solution, params, opts);
}

diffopt::GradientResult embedded_gradient(const MILPProblem& problem, const Vector& params, const BnbOptions& opts,
                                          const diffopt::SensitivityOptions& sens) {
  diffopt::GradientResult last;
  bool any = false;
  BnbOptions instrumented = opts;
  instrumented.on_incumbent = [&](const MILPResult& incumbent) {
    last = diffopt::cost_gradient(incumbent.lp_star, incumbent.lp_solution, params, sens);
    any = true;
    if (opts.on_incumbent) opts.on_incumbent(incumbent);
  };
  const MILPResult result = branch_and_bound(problem, params, instrumented);
  if (result.status != MilpStatus::kOptimal || !any)
    throw InvalidInput(kModule, "embedded gradient needs an optimal MILP, got " + to_string(result.status));
  return last;
}

EnumerationResult enumerate_integer_assignments(const MILPProblem& problem, const Vector& params,
                                                const lp::SimplexOptions& opts) {
  problem.validate();
  const int b = static_cast<int>(problem.integer_vars.size());
  if (b > 20) throw InvalidInput(kModule, fmt::format("enumeration supports at most 20 binaries, got {}", b));
  for (int j : problem.integer_vars)
    if (problem.base.lower[j] < 0.0 || problem.base.upper[j] > 1.0)
      throw InvalidInput(kModule, fmt::format("integer variable {} is not binary", j));

  EnumerationResult out;
  out.C_star = lp::kInf;
  lp::SimplexEngine engine(problem.base, params, opts);
  const long count = 1L << b;
  for (long mask = 0; mask < count; ++mask) {
    bool possible = true;
    for (int k = 0; k < b; ++k) {
      const int j = problem.integer_vars[k];
      const double v = (mask >> (b - 1 - k)) & 1L ? 1.0 : 0.0;
      if (v < problem.base.lower[j] || v > problem.base.upper[j]) possible = false;
      engine.set_bounds(j, v, v);
    }
    if (!possible) continue;
    ++out.assignments;
    const auto status = engine.solve();
    if (status == lp::SolveStatus::kUnbounded) {
      out.status = MilpStatus::kUnbounded;
      return out;
    }
    if (status != lp::SolveStatus::kOptimal) continue;
    const auto sol = engine.solution();
    if (sol.objective < out.C_star) {
      out.C_star = sol.objective;
      out.z_star = sol.primal;
      out.status = MilpStatus::kOptimal;
    }
  }
  return out;
}

}  // namespace mesval::milp
