#include "mesval/lp/simplex.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::lp {

namespace {

constexpr const char* kModule = "lp_core";

constexpr signed char kBasic = 0;
constexpr signed char kAtLower = -1;
constexpr signed char kAtUpper = 1;
constexpr signed char kFreeZero = 2;

// B^{-1} kept as a sparse LU of the last refactored basis followed by a
// product of elementary column transformations.
class BasisFactor {
 public:
  bool factorize(const SparseMatrix& basis) {
    etas_.clear();
    lu_.compute(basis);
    return lu_.info() == Eigen::Success;
  }

  void ftran(Vector& x) const {
    x = lu_.solve(x).eval();
    for (const auto& e : etas_) {
      const double xr = x[e.row] / e.pivot;
      if (xr != 0.0)
        for (std::size_t k = 0; k < e.idx.size(); ++k) x[e.idx[k]] -= e.val[k] * xr;
      x[e.row] = xr;
    }
  }

  void btran(Vector& x) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = x[it->row];
      for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * x[it->idx[k]];
      x[it->row] = s / it->pivot;
    }
    x = lu_.transpose().solve(x).eval();
  }

  // Basis column at position `row` replaced; `alpha` = B_old^{-1} a_new.
  void update(int row, const Vector& alpha) {
    Eta e;
    e.row = row;
    e.pivot = alpha[row];
    for (int i = 0; i < alpha.size(); ++i) {
      if (i != row && alpha[i] != 0.0) {
        e.idx.push_back(i);
        e.val.push_back(alpha[i]);
      }
    }
    etas_.push_back(std::move(e));
  }

  int eta_count() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
  };
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

struct SimplexEngine::Impl {
  const LPStandardForm* lp = nullptr;
  SimplexOptions opts;
  int n = 0, q = 0, r = 0, m = 0, total = 0;

  std::vector<int> col_start;
  std::vector<int> row_idx;
  std::vector<double> vals;

  Vector cost, lo, hi, b;
  Vector x;
  std::vector<int> head;
  std::vector<int> pos;
  std::vector<signed char> flag;

  BasisFactor factor;
  long iterations = 0;
  SolveStatus status = SolveStatus::kInfeasible;
  bool solved = false;

  Impl(const LPStandardForm& form, const Vector& params, SimplexOptions o) : lp(&form), opts(o) {
    form.validate();
    if (params.size() != form.param_dim)
      throw InvalidInput(kModule, fmt::format("parameter vector has {} entries, expected {}", params.size(), form.param_dim));
    n = form.n_vars;
    q = form.num_ineq();
    r = form.num_eq();
    m = q + r;
    total = n + m;

    // Stack A_f over A_h column by column.
    col_start.assign(n + 1, 0);
    SparseMatrix af = form.ineq_matrix;
    SparseMatrix ah = form.eq_matrix;
    af.makeCompressed();
    ah.makeCompressed();
    for (int j = 0; j < n; ++j) {
      for (SparseMatrix::InnerIterator it(af, j); it; ++it) {
        if (it.value() == 0.0) continue;
        row_idx.push_back(static_cast<int>(it.row()));
        vals.push_back(it.value());
      }
      for (SparseMatrix::InnerIterator it(ah, j); it; ++it) {
        if (it.value() == 0.0) continue;
        row_idx.push_back(q + static_cast<int>(it.row()));
        vals.push_back(it.value());
      }
      col_start[j + 1] = static_cast<int>(row_idx.size());
    }

    cost = Vector::Zero(total);
    cost.head(n) = form.cost;
    lo.resize(total);
    hi.resize(total);
    lo.head(n) = form.lower;
    hi.head(n) = form.upper;
    for (int i = 0; i < m; ++i) {
      lo[n + i] = 0.0;
      hi[n + i] = i < q ? kInf : 0.0;
    }
    b.resize(m);
    b.head(q) = form.ineq_offset(params);
    b.tail(r) = form.eq_offset(params);
    for (int i = 0; i < m; ++i)
      if (!std::isfinite(b[i])) throw InvalidInput(kModule, "non-finite right-hand side");

    x = Vector::Zero(total);
    slack_basis();
  }

  void slack_basis() {
    head.resize(m);
    pos.assign(total, -1);
    flag.assign(total, kAtLower);
    for (int j = 0; j < n; ++j) flag[j] = nonbasic_flag(j);
    for (int i = 0; i < m; ++i) {
      head[i] = n + i;
      pos[n + i] = i;
      flag[n + i] = kBasic;
    }
  }

  signed char nonbasic_flag(int j) const {
    if (std::isfinite(lo[j])) return kAtLower;
    if (std::isfinite(hi[j])) return kAtUpper;
    return kFreeZero;
  }

  // Keeps nonbasic flags consistent with (possibly changed) bounds and puts
  // nonbasic variables on them.
  void place_nonbasic() {
    for (int j = 0; j < total; ++j) {
      if (flag[j] == kBasic) continue;
      if (flag[j] == kAtLower && !std::isfinite(lo[j])) flag[j] = nonbasic_flag(j);
      if (flag[j] == kAtUpper && !std::isfinite(hi[j])) flag[j] = nonbasic_flag(j);
      if (flag[j] == kFreeZero && (std::isfinite(lo[j]) || std::isfinite(hi[j]))) flag[j] = nonbasic_flag(j);
      x[j] = flag[j] == kAtLower ? lo[j] : flag[j] == kAtUpper ? hi[j] : 0.0;
    }
  }

  double column_dot(int j, const Vector& y) const {
    if (j >= n) return y[j - n];
    double s = 0.0;
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) s += vals[k] * y[row_idx[k]];
    return s;
  }

  void add_column(int j, double scale, Vector& out) const {
    if (j >= n) {
      out[j - n] += scale;
      return;
    }
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) out[row_idx[k]] += scale * vals[k];
  }

  bool refactor() {
    std::vector<Triplet> t;
    t.reserve(m * 3);
    for (int i = 0; i < m; ++i) {
      const int j = head[i];
      if (j >= n) {
        t.emplace_back(j - n, i, 1.0);
      } else {
        for (int k = col_start[j]; k < col_start[j + 1]; ++k) t.emplace_back(row_idx[k], i, vals[k]);
      }
    }
    SparseMatrix basis(m, m);
    basis.setFromTriplets(t.begin(), t.end());
    basis.makeCompressed();
    return factor.factorize(basis);
  }

  // Refactorizes; a singular basis is replaced by the all-logical one.
  void refactor_or_reset() {
    if (m == 0) return;
    if (refactor()) return;
    for (int j = 0; j < n; ++j)
      if (flag[j] == kBasic) flag[j] = nonbasic_flag(j);
    slack_basis();
    place_nonbasic();
    if (!refactor()) throw NumericalError(kModule, "logical basis failed to factorize");
  }

  void recompute_basic() {
    if (m == 0) return;
    Vector rhs = b;
    for (int j = 0; j < total; ++j)
      if (flag[j] != kBasic && x[j] != 0.0) add_column(j, -x[j], rhs);
    factor.ftran(rhs);
    for (int i = 0; i < m; ++i) x[head[i]] = rhs[i];
  }

  void fresh_start() {
    refactor_or_reset();
    place_nonbasic();
    recompute_basic();
  }

  Vector basic_costs() const {
    Vector cb(m);
    for (int i = 0; i < m; ++i) cb[i] = cost[head[i]];
    return cb;
  }

  Vector duals_y(const Vector& cb) const {
    Vector y = cb;
    if (m > 0) factor.btran(y);
    return y;
  }

  double infeasibility(int j) const {
    if (x[j] < lo[j] - opts.feasibility_tol) return lo[j] - x[j];
    if (x[j] > hi[j] + opts.feasibility_tol) return x[j] - hi[j];
    return 0.0;
  }

  // ---------------------------------------------------------------- primal
  SolveStatus primal() {
    fresh_start();
    bool fresh = true;
    int degenerate_run = 0;
    std::vector<char> rejected(total, 0);
    bool any_rejected = false;

    for (;;) {
      if (iterations >= opts.max_iterations) throw NumericalError(kModule, "simplex iteration limit reached");
      if (factor.eta_count() >= opts.refactor_interval) {
        fresh_start();
        fresh = true;
      }

      Vector cb(m);
      bool phase1 = false;
      for (int i = 0; i < m; ++i) {
        const int j = head[i];
        if (x[j] < lo[j] - opts.feasibility_tol) {
          cb[i] = -1.0;
          phase1 = true;
        } else if (x[j] > hi[j] + opts.feasibility_tol) {
          cb[i] = 1.0;
          phase1 = true;
        } else {
          cb[i] = 0.0;
        }
      }
      if (!phase1) cb = basic_costs();
      const Vector y = duals_y(cb);

      const bool bland = opts.pivot_rule == PivotRule::kBland || degenerate_run >= opts.degenerate_switch;
      int enter = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < total; ++j) {
        if (flag[j] == kBasic || rejected[j] || lo[j] == hi[j]) continue;
        const double d = (phase1 ? 0.0 : cost[j]) - column_dot(j, y);
        int candidate_dir = 0;
        if (d < -opts.optimality_tol && flag[j] != kAtUpper) candidate_dir = 1;
        else if (d > opts.optimality_tol && flag[j] != kAtLower) candidate_dir = -1;
        if (candidate_dir == 0) continue;
        if (bland) {
          enter = j;
          dir = candidate_dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = candidate_dir;
        }
      }

      if (enter < 0) {
        if (!fresh) {
          fresh_start();
          fresh = true;
          std::fill(rejected.begin(), rejected.end(), 0);
          any_rejected = false;
          continue;
        }
        if (any_rejected) throw NumericalError(kModule, "phase one stalled on unbounded ratio tests");
        return phase1 ? SolveStatus::kInfeasible : SolveStatus::kOptimal;
      }

      Vector alpha = Vector::Zero(m);
      add_column(enter, 1.0, alpha);
      if (m > 0) factor.ftran(alpha);

      // Ratio test. Basic variable i moves at rate -dir * alpha_i.
      int leave = -1;
      bool leave_upper = false;
      double t_min = kInf;
      double best_pivot = 0.0;
      const double flip = hi[enter] - lo[enter];
      if (bland) {
        for (int i = 0; i < m; ++i) {
          if (std::abs(alpha[i]) <= opts.ratio_tol) continue;
          const int j = head[i];
          const double rate = -dir * alpha[i];
          double limit = kInf;
          bool to_upper = false;
          if (rate < 0.0) {
            if (x[j] > hi[j] + opts.feasibility_tol) {
              limit = (x[j] - hi[j]) / -rate;
              to_upper = true;
            } else if (std::isfinite(lo[j]) && x[j] >= lo[j] - opts.feasibility_tol) {
              limit = std::max(0.0, x[j] - lo[j]) / -rate;
            }
          } else {
            if (x[j] < lo[j] - opts.feasibility_tol) {
              limit = (lo[j] - x[j]) / rate;
            } else if (std::isfinite(hi[j]) && x[j] <= hi[j] + opts.feasibility_tol) {
              limit = std::max(0.0, hi[j] - x[j]) / rate;
              to_upper = true;
            }
          }
          if (!std::isfinite(limit)) continue;
          const bool strictly = limit < t_min - 1e-12;
          if (strictly || (limit <= t_min + 1e-12 && j < head[leave])) {
            t_min = strictly ? limit : std::min(limit, t_min);
            leave = i;
            leave_upper = to_upper;
          }
        }
      } else {
        // Harris two-pass: bound on the step with relaxed bounds, then the
        // largest pivot among rows that block within it.
        double relaxed = kInf;
        for (int i = 0; i < m; ++i) {
          if (std::abs(alpha[i]) <= opts.ratio_tol) continue;
          const int j = head[i];
          const double rate = -dir * alpha[i];
          double limit = kInf;
          if (rate < 0.0) {
            if (x[j] > hi[j] + opts.feasibility_tol) limit = (x[j] - hi[j] + opts.feasibility_tol) / -rate;
            else if (std::isfinite(lo[j]) && x[j] >= lo[j] - opts.feasibility_tol)
              limit = (x[j] - lo[j] + opts.feasibility_tol) / -rate;
          } else {
            if (x[j] < lo[j] - opts.feasibility_tol) limit = (lo[j] - x[j] + opts.feasibility_tol) / rate;
            else if (std::isfinite(hi[j]) && x[j] <= hi[j] + opts.feasibility_tol)
              limit = (hi[j] - x[j] + opts.feasibility_tol) / rate;
          }
          relaxed = std::min(relaxed, limit);
        }
        if (std::isfinite(relaxed)) {
          for (int i = 0; i < m; ++i) {
            if (std::abs(alpha[i]) <= opts.ratio_tol) continue;
            const int j = head[i];
            const double rate = -dir * alpha[i];
            double limit = kInf;
            bool to_upper = false;
            if (rate < 0.0) {
              if (x[j] > hi[j] + opts.feasibility_tol) {
                limit = (x[j] - hi[j]) / -rate;
                to_upper = true;
              } else if (std::isfinite(lo[j]) && x[j] >= lo[j] - opts.feasibility_tol) {
                limit = std::max(0.0, x[j] - lo[j]) / -rate;
              }
            } else {
              if (x[j] < lo[j] - opts.feasibility_tol) {
                limit = (lo[j] - x[j]) / rate;
              } else if (std::isfinite(hi[j]) && x[j] <= hi[j] + opts.feasibility_tol) {
                limit = std::max(0.0, hi[j] - x[j]) / rate;
                to_upper = true;
              }
            }
            if (limit > relaxed) continue;
            if (std::abs(alpha[i]) > best_pivot) {
              best_pivot = std::abs(alpha[i]);
              leave = i;
              leave_upper = to_upper;
              t_min = limit;
            }
          }
        }
      }

      const bool do_flip = std::isfinite(flip) && flip <= t_min;
      if (!do_flip && leave < 0) {
        if (!phase1) return SolveStatus::kUnbounded;
        rejected[enter] = 1;
        any_rejected = true;
        continue;
      }

      if (!do_flip && std::abs(alpha[leave]) < 1e-7 && !fresh) {
        // Suspicious pivot: retry on a fresh factorization.
        fresh_start();
        fresh = true;
        continue;
      }
      if (!do_flip && std::abs(alpha[leave]) < opts.pivot_tol)
        throw NumericalError(kModule, fmt::format("pivot {:.3e} below tolerance after refactorization", alpha[leave]));

      const double step = do_flip ? flip : t_min;
      ++iterations;
      degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
      fresh = false;
      if (any_rejected) {
        std::fill(rejected.begin(), rejected.end(), 0);
        any_rejected = false;
      }

      if (step != 0.0) {
        x[enter] += dir * step;
        for (int i = 0; i < m; ++i)
          if (alpha[i] != 0.0) x[head[i]] -= dir * alpha[i] * step;
      }
      if (do_flip) {
        flag[enter] = dir > 0 ? kAtUpper : kAtLower;
        x[enter] = dir > 0 ? hi[enter] : lo[enter];
        continue;
      }
      pivot(leave, enter, leave_upper, alpha);
    }
  }

  void pivot(int row, int enter, bool leave_upper, const Vector& alpha) {
    const int out = head[row];
    x[out] = leave_upper ? hi[out] : lo[out];
    flag[out] = leave_upper ? kAtUpper : kAtLower;
    if (lo[out] == hi[out]) flag[out] = kAtLower;
    pos[out] = -1;
    head[row] = enter;
    pos[enter] = row;
    flag[enter] = kBasic;
    factor.update(row, alpha);
  }

  // ------------------------------------------------------------------ dual
  SolveStatus dual() {
    fresh_start();
    {
      const Vector y = duals_y(basic_costs());
      for (int j = 0; j < total; ++j) {
        if (flag[j] == kBasic || lo[j] == hi[j]) continue;
        const double d = cost[j] - column_dot(j, y);
        const bool bad = (flag[j] == kAtLower && d < -opts.optimality_tol) ||
                         (flag[j] == kAtUpper && d > opts.optimality_tol) ||
                         (flag[j] == kFreeZero && std::abs(d) > opts.optimality_tol);
        if (bad) return primal();
      }
    }

    const long budget = iterations + 20L * (m + 10);
    bool fresh = true;
    for (;;) {
      if (iterations >= budget) return primal();
      if (factor.eta_count() >= opts.refactor_interval) {
        fresh_start();
        fresh = true;
      }

      const bool bland = opts.pivot_rule == PivotRule::kBland;
      int row = -1;
      double worst = 0.0;
      for (int i = 0; i < m; ++i) {
        const double v = infeasibility(head[i]);
        if (v <= 0.0) continue;
        if (bland) {
          if (row < 0 || head[i] < head[row]) row = i;
        } else if (v > worst) {
          worst = v;
          row = i;
        }
      }
      if (row < 0) return primal();  // primal feasible: confirm optimality

      const int out = head[row];
      const bool go_up = x[out] < lo[out];
      const double target = go_up ? lo[out] : hi[out];

      Vector rho = Vector::Zero(m);
      rho[row] = 1.0;
      factor.btran(rho);
      const Vector y = duals_y(basic_costs());

      int enter = -1;
      double best_ratio = kInf;
      double best_alpha = 0.0;
      for (int j = 0; j < total; ++j) {
        if (flag[j] == kBasic || lo[j] == hi[j]) continue;
        const double a = column_dot(j, rho);
        if (std::abs(a) <= opts.ratio_tol) continue;
        // x_out moves by -a * dx_j.
        bool ok = false;
        if (flag[j] == kFreeZero) ok = true;
        else if (flag[j] == kAtLower) ok = go_up ? a < 0.0 : a > 0.0;
        else ok = go_up ? a > 0.0 : a < 0.0;
        if (!ok) continue;
        const double d = cost[j] - column_dot(j, y);
        const double ratio = std::max(0.0, flag[j] == kAtUpper ? -d : flag[j] == kAtLower ? d : std::abs(d)) / std::abs(a);
        const bool better = bland ? ratio < best_ratio - 1e-12
                                  : (ratio < best_ratio - 1e-12 ||
                                     (ratio <= best_ratio + 1e-12 && std::abs(a) > best_alpha));
        if (better) {
          best_ratio = ratio;
          best_alpha = std::abs(a);
          enter = j;
        }
      }
      if (enter < 0) {
        if (!fresh) {
          fresh_start();
          fresh = true;
          continue;
        }
        return SolveStatus::kInfeasible;
      }

      Vector alpha = Vector::Zero(m);
      add_column(enter, 1.0, alpha);
      factor.ftran(alpha);
      if (std::abs(alpha[row]) < 1e-7) {
        if (!fresh) {
          fresh_start();
          fresh = true;
          continue;
        }
        if (std::abs(alpha[row]) < opts.pivot_tol) return primal();
      }

      const double dx = (x[out] - target) / alpha[row];
      x[enter] += dx;
      for (int i = 0; i < m; ++i)
        if (alpha[i] != 0.0) x[head[i]] -= alpha[i] * dx;
      ++iterations;
      fresh = false;
      pivot(row, enter, !go_up, alpha);
    }
  }

  LPSolution solution() const {
    LPSolution sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.primal = x.head(n);
    const int folded = folded_ineq_count(with_bounds(*lp, lo.head(n), hi.head(n)));
    sol.ineq_duals = Vector::Zero(folded);
    sol.eq_duals = Vector::Zero(r);
    for (int i = 0; i < m; ++i) sol.basis.push_back(head[i]);
    std::sort(sol.basis.begin(), sol.basis.end());
    sol.objective = lp->objective(sol.primal);
    if (status != SolveStatus::kOptimal) return sol;

    const Vector y = duals_y(basic_costs());
    for (int i = 0; i < q; ++i) sol.ineq_duals[i] = flag[n + i] == kBasic ? 0.0 : -y[i];
    for (int i = 0; i < r; ++i) sol.eq_duals[i] = -y[q + i];
    int row = q;
    for (int j = 0; j < n; ++j) {
      const double d = flag[j] == kBasic ? 0.0 : cost[j] - column_dot(j, y);
      double lam_lo = 0.0, lam_hi = 0.0;
      if (flag[j] != kBasic) {
        if (lo[j] == hi[j]) (d >= 0.0 ? lam_lo : lam_hi) = std::abs(d);
        else if (flag[j] == kAtLower) lam_lo = d;
        else if (flag[j] == kAtUpper) lam_hi = -d;
      }
      // Bound rows follow the engine's current bounds, which differ from
      // the form's after set_bounds().
      if (std::isfinite(lo[j])) sol.ineq_duals[row++] = lam_lo;
      if (std::isfinite(hi[j])) sol.ineq_duals[row++] = lam_hi;
    }
    return sol;
  }
};

SimplexEngine::SimplexEngine(const LPStandardForm& lp, const Vector& params, SimplexOptions opts)
    : impl_(std::make_unique<Impl>(lp, params, opts)) {}
SimplexEngine::~SimplexEngine() = default;
SimplexEngine::SimplexEngine(SimplexEngine&&) noexcept = default;
SimplexEngine& SimplexEngine::operator=(SimplexEngine&&) noexcept = default;

SolveStatus SimplexEngine::solve() {
  impl_->slack_basis();
  impl_->status = impl_->primal();
  impl_->solved = true;
  return impl_->status;
}

SolveStatus SimplexEngine::resolve() {
  if (!impl_->solved) return solve();
  impl_->status = impl_->dual();
  return impl_->status;
}

void SimplexEngine::set_bounds(int j, double lower, double upper) {
  if (j < 0 || j >= impl_->n) throw InvalidInput(kModule, fmt::format("variable index {} out of range", j));
  if (lower > upper) throw InvalidInput(kModule, fmt::format("variable {} bounds cross", j));
  impl_->lo[j] = lower;
  impl_->hi[j] = upper;
}

void SimplexEngine::reset_bounds() {
  impl_->lo.head(impl_->n) = impl_->lp->lower;
  impl_->hi.head(impl_->n) = impl_->lp->upper;
}

BasisState SimplexEngine::basis_state() const {
  BasisState s;
  s.head = impl_->head;
  s.flag = impl_->flag;
  return s;
}

void SimplexEngine::load_basis(const BasisState& state) {
  auto& im = *impl_;
  if (static_cast<int>(state.head.size()) != im.m || static_cast<int>(state.flag.size()) != im.total)
    throw InvalidInput(kModule, "basis snapshot does not match the problem dimensions");
  im.head = state.head;
  im.flag = state.flag;
  im.pos.assign(im.total, -1);
  for (int i = 0; i < im.m; ++i) im.pos[im.head[i]] = i;
  im.solved = true;
}

LPSolution SimplexEngine::solution() const { return impl_->solution(); }

long SimplexEngine::iterations() const { return impl_->iterations; }

LPSolution solve_lp(const LPStandardForm& lp, const Vector& params, const SimplexOptions& opts) {
  SimplexEngine engine(lp, params, opts);
  engine.solve();
  return engine.solution();
}

// --------------------------------------------------------------------- KKT

double dual_objective(const LPStandardForm& lp, const Vector& params, const Vector& ineq_duals, const Vector& eq_duals) {
  const LPStandardForm folded = fold_bounds(lp);
  return -ineq_duals.dot(folded.ineq_offset(params)) - eq_duals.dot(lp.eq_offset(params)) + lp.cost_offset;
}

bool KktReport::ok(double tol, double objective) const {
  const double scale = tol * (1.0 + std::abs(objective));
  return primal_ineq <= scale && primal_eq <= scale && stationarity <= scale && dual_sign <= scale &&
         complementarity <= scale && duality_gap <= scale;
}

KktReport check_kkt(const LPStandardForm& lp, const Vector& params, const Vector& primal, const Vector& ineq_duals,
                    const Vector& eq_duals) {
  const LPStandardForm folded = fold_bounds(lp);
  if (primal.size() != lp.n_vars || ineq_duals.size() != folded.num_ineq() || eq_duals.size() != lp.num_eq())
    throw InvalidInput(kModule, "KKT check received vectors of the wrong size");
  KktReport rep;
  const Vector f = folded.ineq_values(primal, params);
  const Vector h = folded.eq_values(primal, params);
  rep.primal_ineq = f.size() ? std::max(0.0, f.maxCoeff()) : 0.0;
  rep.primal_eq = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
  const Vector grad = lp.cost + folded.ineq_matrix.transpose() * ineq_duals + folded.eq_matrix.transpose() * eq_duals;
  rep.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  rep.dual_sign = ineq_duals.size() ? std::max(0.0, -ineq_duals.minCoeff()) : 0.0;
  rep.complementarity = f.size() ? ineq_duals.cwiseProduct(f).cwiseAbs().maxCoeff() : 0.0;
  rep.duality_gap = std::abs(lp.objective(primal) - dual_objective(lp, params, ineq_duals, eq_duals));
  return rep;
}

}  // namespace mesval::lp
