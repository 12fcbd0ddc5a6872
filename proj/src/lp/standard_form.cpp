#include "mesval/lp/standard_form.hpp"

#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::lp {

namespace {

constexpr const char* kModule = "lp_core";

Vector rhs_at(const Vector& base, const SparseMatrix& jac, const Vector& params) {
  if (jac.cols() == 0) return base;
  return base + jac * params;
}

}  // namespace

Vector LPStandardForm::ineq_offset(const Vector& params) const {
  return rhs_at(ineq_rhs, ineq_param, params);
}

Vector LPStandardForm::eq_offset(const Vector& params) const {
  return rhs_at(eq_rhs, eq_param, params);
}

Vector LPStandardForm::ineq_values(const Vector& z, const Vector& params) const {
  return ineq_matrix * z - ineq_offset(params);
}

Vector LPStandardForm::eq_values(const Vector& z, const Vector& params) const {
  return eq_matrix * z - eq_offset(params);
}

void LPStandardForm::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidInput(kModule, msg); };
  if (n_vars < 0 || param_dim < 0) fail("negative dimension");
  if (cost.size() != n_vars) fail(fmt::format("cost has {} entries, expected {}", cost.size(), n_vars));
  if (lower.size() != n_vars || upper.size() != n_vars) fail("bound vectors do not match n_vars");
  if (ineq_matrix.cols() != n_vars || eq_matrix.cols() != n_vars) fail("constraint matrix width does not match n_vars");
  if (ineq_rhs.size() != ineq_matrix.rows()) fail("inequality rhs length mismatch");
  if (eq_rhs.size() != eq_matrix.rows()) fail("equality rhs length mismatch");
  if (ineq_param.rows() != ineq_matrix.rows() || ineq_param.cols() != param_dim)
    fail("inequality parameter Jacobian has wrong shape");
  if (eq_param.rows() != eq_matrix.rows() || eq_param.cols() != param_dim)
    fail("equality parameter Jacobian has wrong shape");
  for (int j = 0; j < n_vars; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j])) fail(fmt::format("variable {} has NaN bound", j));
    if (lower[j] > upper[j])
      fail(fmt::format("variable {} has lower bound {} above upper bound {}", j, lower[j], upper[j]));
  }
  if (!var_names.empty() && static_cast<int>(var_names.size()) != n_vars) fail("var_names length mismatch");
}

int folded_ineq_count(const LPStandardForm& lp) {
  int count = lp.num_ineq();
  for (int j = 0; j < lp.n_vars; ++j) {
    if (std::isfinite(lp.lower[j])) ++count;
    if (std::isfinite(lp.upper[j])) ++count;
  }
  return count;
}

LPStandardForm fold_bounds(const LPStandardForm& lp) {
  const int q = lp.num_ineq();
  const int total = folded_ineq_count(lp);

  std::vector<Triplet> a;
  std::vector<Triplet> p;
  a.reserve(lp.ineq_matrix.nonZeros() + (total - q));
  p.reserve(lp.ineq_param.nonZeros());
  for (int k = 0; k < lp.ineq_matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(lp.ineq_matrix, k); it; ++it) a.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < lp.ineq_param.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(lp.ineq_param, k); it; ++it) p.emplace_back(it.row(), it.col(), it.value());

  LPStandardForm out = lp;
  out.ineq_rhs.resize(total);
  out.ineq_rhs.head(q) = lp.ineq_rhs;
  bool named = !lp.var_names.empty();
  if (!out.ineq_names.empty() || named) out.ineq_names.resize(total);

  int row = q;
  for (int j = 0; j < lp.n_vars; ++j) {
    if (std::isfinite(lp.lower[j])) {
      a.emplace_back(row, j, -1.0);
      out.ineq_rhs[row] = -lp.lower[j];
      if (named) out.ineq_names[row] = lp.var_names[j] + ".lb";
      ++row;
    }
    if (std::isfinite(lp.upper[j])) {
      a.emplace_back(row, j, 1.0);
      out.ineq_rhs[row] = lp.upper[j];
      if (named) out.ineq_names[row] = lp.var_names[j] + ".ub";
      ++row;
    }
  }

  out.ineq_matrix.resize(total, lp.n_vars);
  out.ineq_matrix.setFromTriplets(a.begin(), a.end());
  out.ineq_param.resize(total, lp.param_dim);
  out.ineq_param.setFromTriplets(p.begin(), p.end());
  out.lower = Vector::Constant(lp.n_vars, -kInf);
  out.upper = Vector::Constant(lp.n_vars, kInf);
  return out;
}

LPStandardForm with_bounds(const LPStandardForm& lp, const Vector& lower, const Vector& upper) {
  LPStandardForm out = lp;
  out.lower = lower;
  out.upper = upper;
  return out;
}

int LpSpec::add_variable(LpVariable var) {
  variables.push_back(std::move(var));
  return static_cast<int>(variables.size()) - 1;
}

LPStandardForm to_standard_form(const LpSpec& spec) {
  const int n = static_cast<int>(spec.variables.size());
  if (spec.param_dim < 0) throw InvalidInput(kModule, "negative parameter dimension");

  std::unordered_map<std::string, int> index;
  index.reserve(n * 2);
  LPStandardForm lp;
  lp.n_vars = n;
  lp.param_dim = spec.param_dim;
  lp.cost_offset = spec.cost_offset;
  lp.cost.resize(n);
  lp.lower.resize(n);
  lp.upper.resize(n);
  lp.var_names.reserve(n);
  for (int j = 0; j < n; ++j) {
    const auto& v = spec.variables[j];
    if (v.name.empty()) throw InvalidInput(kModule, fmt::format("variable {} has an empty name", j));
    if (!index.emplace(v.name, j).second) throw InvalidInput(kModule, fmt::format("duplicate variable name '{}'", v.name));
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper)
      throw InvalidInput(kModule, fmt::format("variable '{}' has lower bound {} above upper bound {}", v.name, v.lower, v.upper));
    if (!std::isfinite(v.cost)) throw InvalidInput(kModule, fmt::format("variable '{}' has non-finite cost", v.name));
    lp.cost[j] = v.cost;
    lp.lower[j] = v.lower;
    lp.upper[j] = v.upper;
    lp.var_names.push_back(v.name);
  }

  std::vector<Triplet> af, pf, ah, ph;
  std::vector<double> bf, bh;
  for (const auto& row : spec.rows) {
    const bool eq = row.sense == Sense::kEqual;
    const double sign = row.sense == Sense::kGreaterEqual ? -1.0 : 1.0;
    const int r = static_cast<int>(eq ? bh.size() : bf.size());
    auto& mat = eq ? ah : af;
    auto& par = eq ? ph : pf;
    for (const auto& t : row.terms) {
      auto it = index.find(t.var);
      if (it == index.end())
        throw InvalidInput(kModule, fmt::format("row '{}' references undeclared variable '{}'", row.name, t.var));
      if (!std::isfinite(t.coef))
        throw InvalidInput(kModule, fmt::format("row '{}' has a non-finite coefficient", row.name));
      mat.emplace_back(r, it->second, sign * t.coef);
    }
    for (const auto& pt : row.params) {
      if (pt.slot < 0 || pt.slot >= spec.param_dim)
        throw InvalidInput(kModule, fmt::format("row '{}' uses parameter slot {} outside [0, {})", row.name, pt.slot, spec.param_dim));
      par.emplace_back(r, pt.slot, sign * pt.coef);
    }
    if (!std::isfinite(row.rhs)) throw InvalidInput(kModule, fmt::format("row '{}' has a non-finite rhs", row.name));
    (eq ? bh : bf).push_back(sign * row.rhs);
    (eq ? lp.eq_names : lp.ineq_names).push_back(row.name);
  }

  // setFromTriplets sums duplicates, which is what repeated terms mean.
  lp.ineq_matrix.resize(static_cast<int>(bf.size()), n);
  lp.ineq_matrix.setFromTriplets(af.begin(), af.end());
  lp.ineq_param.resize(static_cast<int>(bf.size()), spec.param_dim);
  lp.ineq_param.setFromTriplets(pf.begin(), pf.end());
  lp.ineq_rhs = Eigen::Map<const Vector>(bf.data(), static_cast<int>(bf.size()));
  lp.eq_matrix.resize(static_cast<int>(bh.size()), n);
  lp.eq_matrix.setFromTriplets(ah.begin(), ah.end());
  lp.eq_param.resize(static_cast<int>(bh.size()), spec.param_dim);
  lp.eq_param.setFromTriplets(ph.begin(), ph.end());
  lp.eq_rhs = Eigen::Map<const Vector>(bh.data(), static_cast<int>(bh.size()));
  return lp;
}

std::vector<int> integer_indices(const LpSpec& spec) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(spec.variables.size()); ++j)
    if (spec.variables[j].integer) out.push_back(j);
  return out;
}

}  // namespace mesval::lp
