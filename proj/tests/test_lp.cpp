#include <random>

#include "doctest.h"
#include "lp_oracles.hpp"
#include "mesval/common/error.hpp"
#include "mesval/lp/simplex.hpp"

using namespace mesval::lp;

namespace {

LPStandardForm single_lower_bound_row() {
  // min x  s.t.  x >= 3 written as a row, x free.
  LpSpec spec;
  spec.add_variable({"x", -kInf, kInf, 1.0});
  spec.add_row({"floor", Sense::kGreaterEqual, {{"x", 1.0}}, 3.0, {}});
  return to_standard_form(spec);
}

}  // namespace

TEST_CASE("greater-equal row is negated into standard form") {
  LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"x", -kInf, kInf, 1.0});
  spec.add_row({"floor", Sense::kGreaterEqual, {{"x", 1.0}}, 0.0, {{0, 1.0}}});
  const auto lp = to_standard_form(spec);
  REQUIRE(lp.num_ineq() == 1);
  CHECK(Matrix(lp.ineq_matrix)(0, 0) == -1.0);
  CHECK(Matrix(lp.ineq_param)(0, 0) == -1.0);
  CHECK(lp.ineq_rhs[0] == 0.0);
}

TEST_CASE("equality rows go to the equality block unchanged") {
  LpSpec spec;
  spec.add_variable({"x"});
  spec.add_variable({"y"});
  spec.add_row({"sum", Sense::kEqual, {{"x", 2.0}, {"y", 1.0}}, 5.0, {}});
  const auto lp = to_standard_form(spec);
  CHECK(lp.num_ineq() == 0);
  REQUIRE(lp.num_eq() == 1);
  CHECK(Matrix(lp.eq_matrix)(0, 0) == 2.0);
  CHECK(Matrix(lp.eq_matrix)(0, 1) == 1.0);
  CHECK(lp.eq_rhs[0] == 5.0);
}

TEST_CASE("structured LP errors") {
  LpSpec dup;
  dup.add_variable({"x"});
  dup.add_variable({"x"});
  CHECK_THROWS_AS(to_standard_form(dup), mesval::InvalidInput);

  LpSpec undeclared;
  undeclared.add_variable({"x"});
  undeclared.add_row({"r", Sense::kLessEqual, {{"w", 1.0}}, 1.0, {}});
  CHECK_THROWS_AS(to_standard_form(undeclared), mesval::InvalidInput);

  LpSpec crossed;
  crossed.add_variable({"x", 2.0, 1.0});
  CHECK_THROWS_AS(to_standard_form(crossed), mesval::InvalidInput);

  LpSpec slot;
  slot.param_dim = 1;
  slot.add_variable({"x"});
  slot.add_row({"r", Sense::kLessEqual, {{"x", 1.0}}, 1.0, {{3, 1.0}}});
  CHECK_THROWS_AS(to_standard_form(slot), mesval::InvalidInput);
}

TEST_CASE("fold_bounds appends lower then upper rows per variable") {
  LpSpec spec;
  spec.add_variable({"a", 0.0, 1.0});
  spec.add_variable({"b", -kInf, 2.0});
  spec.add_row({"r", Sense::kLessEqual, {{"a", 1.0}, {"b", 1.0}}, 1.5, {}});
  const auto folded = fold_bounds(to_standard_form(spec));
  REQUIRE(folded.num_ineq() == 4);
  const Matrix a(folded.ineq_matrix);
  CHECK(a(1, 0) == -1.0);
  CHECK(folded.ineq_rhs[1] == 0.0);
  CHECK(a(2, 0) == 1.0);
  CHECK(folded.ineq_rhs[2] == 1.0);
  CHECK(a(3, 1) == 1.0);
  CHECK(folded.ineq_rhs[3] == 2.0);
  CHECK(std::isinf(folded.lower[0]));
}

TEST_CASE("row lower bound: optimum and multiplier") {
  const auto lp = single_lower_bound_row();
  for (auto rule : {PivotRule::kBland, PivotRule::kDantzig}) {
    SimplexOptions opts;
    opts.pivot_rule = rule;
    const auto sol = solve_lp(lp, Vector(), opts);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(sol.primal[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-12));
    REQUIRE(sol.ineq_duals.size() == 1);
    CHECK(sol.ineq_duals[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("box-constrained LP matches vertex enumeration") {
  LpSpec spec;
  spec.add_variable({"x", 0.0, 1.0, -1.0});
  spec.add_variable({"y", 0.0, 1.0, -1.0});
  spec.add_row({"cap", Sense::kLessEqual, {{"x", 1.0}, {"y", 1.0}}, 1.5, {}});
  const auto lp = to_standard_form(spec);
  const auto sol = solve_lp(lp, Vector());
  REQUIRE(sol.status == SolveStatus::kOptimal);
  const auto ref = oracle::vertex_enumeration(lp, Vector());
  REQUIRE(ref);
  CHECK(ref->objective == doctest::Approx(-1.5));
  CHECK(sol.objective == doctest::Approx(ref->objective).epsilon(1e-12));
  CHECK(check_kkt(lp, Vector(), sol.primal, sol.ineq_duals, sol.eq_duals).ok(1e-8, sol.objective));
}

TEST_CASE("unbounded and infeasible LPs are reported") {
  LpSpec unb;
  unb.add_variable({"x", 0.0, kInf, -1.0});
  CHECK(solve_lp(to_standard_form(unb), Vector()).status == SolveStatus::kUnbounded);

  LpSpec inf;
  inf.add_variable({"x", -kInf, kInf, 1.0});
  inf.add_row({"hi", Sense::kLessEqual, {{"x", 1.0}}, 1.0, {}});
  inf.add_row({"lo", Sense::kGreaterEqual, {{"x", 1.0}}, 2.0, {}});
  CHECK(solve_lp(to_standard_form(inf), Vector()).status == SolveStatus::kInfeasible);

  LpSpec eq;
  eq.add_variable({"x", 0.0, 1.0, 1.0});
  eq.add_row({"e", Sense::kEqual, {{"x", 1.0}}, 3.0, {}});
  CHECK(solve_lp(to_standard_form(eq), Vector()).status == SolveStatus::kInfeasible);
}

TEST_CASE("cycling-prone degenerate LP terminates under Bland's rule") {
  // Classic degenerate example on which the largest-coefficient rule
  // cycles without an anti-cycling safeguard.
  LpSpec spec;
  spec.add_variable({"x1", 0.0, kInf, -0.75});
  spec.add_variable({"x2", 0.0, kInf, 20.0});
  spec.add_variable({"x3", 0.0, kInf, -0.5});
  spec.add_variable({"x4", 0.0, kInf, 6.0});
  spec.add_row({"r1", Sense::kLessEqual, {{"x1", 0.25}, {"x2", -8.0}, {"x3", -1.0}, {"x4", 9.0}}, 0.0, {}});
  spec.add_row({"r2", Sense::kLessEqual, {{"x1", 0.5}, {"x2", -12.0}, {"x3", -0.5}, {"x4", 3.0}}, 0.0, {}});
  spec.add_row({"r3", Sense::kLessEqual, {{"x3", 1.0}}, 1.0, {}});
  const auto lp = to_standard_form(spec);
  const auto ref = oracle::vertex_enumeration(lp, Vector());
  REQUIRE(ref);
  for (auto rule : {PivotRule::kBland, PivotRule::kDantzig}) {
    SimplexOptions opts;
    opts.pivot_rule = rule;
    const auto sol = solve_lp(lp, Vector(), opts);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(sol.objective == doctest::Approx(ref->objective).epsilon(1e-10));
    CHECK(check_kkt(lp, Vector(), sol.primal, sol.ineq_duals, sol.eq_duals).ok(1e-8, sol.objective));
  }
}

TEST_CASE("random LPs agree with vertex enumeration and satisfy KKT") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nd(1, 4), qd(0, 6), rd(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = nd(rng);
    const int r = std::min(rd(rng), n - 1);
    const auto lp = oracle::random_lp(rng, n, qd(rng), r, 2);
    Vector params = Vector::Random(2) * 0.3;
    const auto ref = oracle::vertex_enumeration(lp, params);
    for (auto rule : {PivotRule::kBland, PivotRule::kDantzig}) {
      SimplexOptions opts;
      opts.pivot_rule = rule;
      const auto sol = solve_lp(lp, params, opts);
      if (!ref) {
        CHECK(sol.status == SolveStatus::kInfeasible);
        continue;
      }
      REQUIRE(sol.status == SolveStatus::kOptimal);
      CHECK(sol.objective == doctest::Approx(ref->objective).epsilon(1e-9));
      const auto rep = check_kkt(lp, params, sol.primal, sol.ineq_duals, sol.eq_duals);
      CHECK(rep.ok(1e-8, sol.objective));
    }
  }
}

TEST_CASE("warm re-solve after bound changes matches a cold solve") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lp = oracle::random_lp(rng, 6, 5, 1, 1);
    const Vector params = Vector::Zero(1);
    SimplexEngine engine(lp, params);
    REQUIRE(engine.solve() == SolveStatus::kOptimal);
    const auto first = engine.solution();
    const int j = trial % 6;
    const double cut = first.primal[j] - 0.5;
    engine.set_bounds(j, lp.lower[j], std::max(cut, lp.lower[j]));
    const auto status = engine.resolve();

    Vector up = lp.upper;
    up[j] = std::max(cut, lp.lower[j]);
    const auto tightened = with_bounds(lp, lp.lower, up);
    const auto cold = solve_lp(tightened, params);
    REQUIRE(status == cold.status);
    if (status != SolveStatus::kOptimal) continue;
    const auto warm = engine.solution();
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
    CHECK(check_kkt(tightened, params, warm.primal, warm.ineq_duals, warm.eq_duals).ok(1e-8, warm.objective));
  }
}

TEST_CASE("parameter vector length is validated") {
  const auto lp = single_lower_bound_row();
  CHECK_THROWS_AS(solve_lp(lp, Vector::Zero(2)), mesval::InvalidInput);
}

TEST_CASE("check_kkt flags constructed violations") {
  const auto lp = single_lower_bound_row();
  Vector z = Vector::Constant(1, 2.0);
  Vector lam = Vector::Constant(1, 1.0);
  auto rep = check_kkt(lp, Vector(), z, lam, Vector());
  CHECK(rep.primal_ineq == doctest::Approx(1.0));
  CHECK_FALSE(rep.ok(1e-8, 2.0));

  // Nonbinding row with a nonzero multiplier.
  LpSpec spec;
  spec.add_variable({"x", -kInf, kInf, 1.0});
  spec.add_row({"floor", Sense::kGreaterEqual, {{"x", 1.0}}, 3.0, {}});
  spec.add_row({"cap", Sense::kLessEqual, {{"x", 1.0}}, 10.0, {}});
  const auto two = to_standard_form(spec);
  const auto sol = solve_lp(two, Vector());
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(check_kkt(two, Vector(), sol.primal, sol.ineq_duals, sol.eq_duals).ok(1e-8, sol.objective));
  Vector bumped = sol.ineq_duals;
  bumped[1] += 0.1;
  rep = check_kkt(two, Vector(), sol.primal, bumped, sol.eq_duals);
  // lambda * f = 0.1 * (3 - 10)
  CHECK(rep.complementarity == doctest::Approx(0.7));
}

TEST_CASE("repeated solves are bit-identical") {
  std::mt19937_64 rng(23);
  const auto lp = oracle::random_lp(rng, 8, 8, 2, 2);
  const Vector m = Vector::Constant(2, 0.1);
  const auto a = solve_lp(lp, m);
  const auto b = solve_lp(lp, m);
  CHECK(a.objective == b.objective);
  CHECK(a.primal == b.primal);
  CHECK(a.ineq_duals == b.ineq_duals);
  CHECK(a.basis == b.basis);
}

TEST_CASE("optimal cost is affine in M while the basis is unchanged") {
  std::mt19937_64 rng(29);
  int tested = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto lp = oracle::random_lp(rng, 5, 6, 1, 2);
    const Vector m = Vector::Zero(2);
    const Vector d = Vector::Random(2) * 1e-4;
    const auto a = solve_lp(lp, m), b = solve_lp(lp, m + d), c = solve_lp(lp, m + 2 * d);
    if (a.basis != b.basis || b.basis != c.basis) continue;
    CHECK(std::abs((c.objective - b.objective) - (b.objective - a.objective)) <= 1e-10);
    ++tested;
  }
  CHECK(tested > 20);
}
