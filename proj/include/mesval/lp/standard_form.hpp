#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mesval::lp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A parameterized LP
///
///   min  c'z + c0
///   s.t. f(z, M) = A_f z - b_f(M) <= 0
///        h(z, M) = A_h z - b_h(M)  = 0
///        lower <= z <= upper
///
/// with b_f(M) = b_f0 + (db_f/dM) M and b_h(M) = b_h0 + (db_h/dM) M. The
/// parameter vector M enters the right-hand sides only, so both parameter
/// Jacobians are constant.
struct LPStandardForm {
  int n_vars = 0;
  int param_dim = 0;

  Vector cost;
  double cost_offset = 0.0;

  SparseMatrix ineq_matrix;  // A_f, q x n
  Vector ineq_rhs;           // b_f0
  SparseMatrix ineq_param;   // db_f/dM, q x param_dim

  SparseMatrix eq_matrix;  // A_h, r x n
  Vector eq_rhs;           // b_h0
  SparseMatrix eq_param;   // db_h/dM, r x param_dim

  Vector lower;
  Vector upper;

  // Optional labels, either empty or sized like the corresponding dimension.
  std::vector<std::string> var_names;
  std::vector<std::string> ineq_names;
  std::vector<std::string> eq_names;

  int num_ineq() const { return static_cast<int>(ineq_matrix.rows()); }
  int num_eq() const { return static_cast<int>(eq_matrix.rows()); }

  Vector ineq_offset(const Vector& params) const;
  Vector eq_offset(const Vector& params) const;

  /// f(z, M); feasible rows are <= 0.
  Vector ineq_values(const Vector& z, const Vector& params) const;
  /// h(z, M); feasible rows are == 0.
  Vector eq_values(const Vector& z, const Vector& params) const;

  double objective(const Vector& z) const { return cost.dot(z) + cost_offset; }

  /// Throws InvalidInput on inconsistent dimensions or crossed bounds.
  void validate() const;
};

/// Returns an equivalent form whose finite variable bounds are appended as
/// inequality rows, in variable order: for each variable j, first
/// `-z_j <= -lower_j` (if finite), then `z_j <= upper_j` (if finite). The
/// returned form has no finite bounds left.
LPStandardForm fold_bounds(const LPStandardForm& lp);

/// Number of inequality rows `fold_bounds(lp)` would produce.
int folded_ineq_count(const LPStandardForm& lp);

/// Copy of `lp` with replaced variable bounds.
LPStandardForm with_bounds(const LPStandardForm& lp, const Vector& lower, const Vector& upper);

// ---------------------------------------------------------------------------
// Structured description with named variables.

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct LpVariable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
  bool integer = false;
};

struct LpTerm {
  std::string var;
  double coef = 0.0;
};

/// Parameter slot entering a row's right-hand side: rhs += coef * M[slot].
struct ParamTerm {
  int slot = 0;
  double coef = 0.0;
};

struct LpRow {
  std::string name;
  Sense sense = Sense::kLessEqual;
  std::vector<LpTerm> terms;
  double rhs = 0.0;
  std::vector<ParamTerm> params;
};

struct LpSpec {
  std::vector<LpVariable> variables;
  std::vector<LpRow> rows;
  int param_dim = 0;
  double cost_offset = 0.0;

  /// Appends a variable and returns its index.
  int add_variable(LpVariable var);
  void add_row(LpRow row) { rows.push_back(std::move(row)); }
};

/// Canonicalizes a structured LP. Rows keep declaration order within the
/// inequality and equality blocks; `>=` rows are negated into `<=` form.
/// Throws InvalidInput on duplicate or undeclared variable names, crossed
/// bounds, or parameter slots outside [0, param_dim).
LPStandardForm to_standard_form(const LpSpec& spec);

/// Indices of the variables flagged `integer` in `spec`.
std::vector<int> integer_indices(const LpSpec& spec);

}  // namespace mesval::lp
