#include <cmath>
#include <random>

#include "doctest.h"
#include "lp_oracles.hpp"
#include "mesval/common/error.hpp"
#include "mesval/diffopt/sensitivity.hpp"

using namespace mesval::lp;
using namespace mesval::diffopt;

namespace {

LPStandardForm floor_lp() {
  // min x s.t. x >= M
  LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"x", -kInf, kInf, 1.0});
  spec.add_row({"floor", Sense::kGreaterEqual, {{"x", 1.0}}, 0.0, {{0, 1.0}}});
  return to_standard_form(spec);
}

LPStandardForm pinned_lp(double cost) {
  // min cost * x s.t. x = M
  LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"x", -kInf, kInf, cost});
  spec.add_row({"pin", Sense::kEqual, {{"x", 1.0}}, 0.0, {{0, 1.0}}});
  return to_standard_form(spec);
}

// Strict complementarity and a unique primal vertex.
bool nondegenerate(const LPStandardForm& lp, const LPSolution& sol, const Vector& m) {
  const auto folded = fold_bounds(lp);
  const Vector f = folded.ineq_values(sol.primal, m);
  int active = 0;
  for (int i = 0; i < f.size(); ++i) {
    const bool tight = std::abs(f[i]) <= 1e-9;
    const bool priced = sol.ineq_duals[i] > 1e-9;
    if (tight != priced) return false;
    active += priced;
  }
  return active + lp.num_eq() == lp.n_vars;
}

}  // namespace

TEST_CASE("scalar KKT blocks for a binding lower bound") {
  const auto lp = floor_lp();
  const Vector m = Vector::Constant(1, 3.0);
  const auto sol = solve_lp(lp, m);
  const auto jac = assemble_kkt_jacobians(lp, sol, m);
  const Matrix gz(jac.G_z);
  REQUIRE(gz.rows() == 2);
  CHECK(gz(0, 0) == 0.0);
  CHECK(gz(0, 1) == -1.0);
  CHECK(gz(1, 0) == -1.0);
  CHECK(gz(1, 1) == 0.0);

  auto j2 = jac;
  const auto s = solution_sensitivity(j2);
  CHECK(s.dz_dM(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.dlambda_dM(0, 0) == doctest::Approx(0.0));
  const auto g = cost_gradient(lp, sol, m);
  CHECK(g.dcost_dM[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.envelope[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(g.degenerate);
}

TEST_CASE("equality-pinned variable") {
  const Vector m = Vector::Constant(1, 2.5);
  for (double c : {1.0, 2.0}) {
    const auto lp = pinned_lp(c);
    const auto sol = solve_lp(lp, m);
    const auto g = cost_gradient(lp, sol, m);
    CHECK(g.dz_dM(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.dcost_dM[0] == doctest::Approx(c).epsilon(1e-14));
  }
}

TEST_CASE("finite-difference oracle on the scalar problem") {
  const auto lp = floor_lp();
  const auto fd = finite_difference_gradient(lp, Vector::Constant(1, 3.0), 1e-5);
  CHECK_FALSE(fd.any_kink());
  CHECK(std::abs(fd.gradient[0] - 1.0) <= 1e-9);
}

TEST_CASE("finite-difference oracle reports a kink") {
  // C*(M) = max(0, M)
  LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"x", 0.0, kInf, 1.0});
  spec.add_row({"floor", Sense::kGreaterEqual, {{"x", 1.0}}, 0.0, {{0, 1.0}}});
  const auto lp = to_standard_form(spec);
  const auto fd = finite_difference_gradient(lp, Vector::Zero(1));
  CHECK(fd.kink[0]);
  CHECK(std::isnan(fd.gradient[0]));
  CHECK(fd.left[0] == doctest::Approx(0.0));
  CHECK(fd.right[0] == doctest::Approx(1.0));
}

TEST_CASE("finite-difference oracle refuses infeasible perturbations") {
  // x in [0, 1], x >= M; infeasible for M > 1.
  LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"x", 0.0, 1.0, 1.0});
  spec.add_row({"floor", Sense::kGreaterEqual, {{"x", 1.0}}, 0.0, {{0, 1.0}}});
  const auto lp = to_standard_form(spec);
  CHECK_THROWS_AS(finite_difference_gradient(lp, Vector::Constant(1, 1.0)), mesval::OracleInapplicable);
}

TEST_CASE("LP Hessian block is zero and G_M matches differences of the residual map") {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto lp = oracle::random_lp(rng, 4, 5, 1, 3);
    const Vector m = Vector::Random(3) * 0.2;
    const auto sol = solve_lp(lp, m);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    const auto jac = assemble_kkt_jacobians(lp, sol, m);
    const Matrix gz(jac.G_z);
    CHECK(gz.topLeftCorner(4, 4).cwiseAbs().maxCoeff() == 0.0);

    const double h = 1e-5;
    const Matrix gm(jac.G_M);
    for (int k = 0; k < 3; ++k) {
      Vector up = m, down = m;
      up[k] += h;
      down[k] -= h;
      const Vector col = (kkt_residual(lp, up, sol.primal, sol.ineq_duals, sol.eq_duals) -
                          kkt_residual(lp, down, sol.primal, sol.ineq_duals, sol.eq_duals)) /
                         (2 * h);
      CHECK((col - gm.col(k)).cwiseAbs().maxCoeff() <= 1e-6);
    }
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("solution sensitivity matches re-solved primal differences") {
  std::mt19937_64 rng(17);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 60; ++trial) {
    const auto lp = oracle::random_lp(rng, 5, 6, 1, 2);
    const Vector m = Vector::Random(2) * 0.2;
    const auto sol = solve_lp(lp, m);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    if (!nondegenerate(lp, sol, m)) continue;
    auto jac = assemble_kkt_jacobians(lp, sol, m);
    const auto s = solution_sensitivity(jac);
    CHECK(s.residual <= 1e-8);
    CHECK(s.regularization == 0.0);
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      Vector up = m, down = m;
      up[k] += h;
      down[k] -= h;
      const auto a = solve_lp(lp, up), b = solve_lp(lp, down);
      const Vector fd = (a.primal - b.primal) / (2 * h);
      const double err = (fd - s.dz_dM.col(k)).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
    const auto g = cost_gradient(lp, sol, m);
    CHECK(g.dcost_dM.isApprox(s.dz_dM.transpose() * lp.cost));
    CHECK((g.dcost_dM - g.envelope).cwiseAbs().maxCoeff() <= 1e-10);
    ++tested;
  }
  CHECK(tested >= 30);
}

TEST_CASE("dual-degenerate LP falls back to the envelope gradient") {
  // min x + y s.t. x + y >= M: every point on the face is optimal.
  LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"x", 0.0, 10.0, 1.0});
  spec.add_variable({"y", 0.0, 10.0, 1.0});
  spec.add_row({"cover", Sense::kGreaterEqual, {{"x", 1.0}, {"y", 1.0}}, 0.0, {{0, 1.0}}});
  const auto lp = to_standard_form(spec);
  const Vector m = Vector::Constant(1, 4.0);
  const auto sol = solve_lp(lp, m);
  const auto g = cost_gradient(lp, sol, m);
  CHECK(g.dcost_dM[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.envelope[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-optimal solutions are rejected") {
  LpSpec spec;
  spec.add_variable({"x", 0.0, kInf, -1.0});
  const auto lp = to_standard_form(spec);
  const auto sol = solve_lp(lp, Vector());
  CHECK_THROWS_AS(assemble_kkt_jacobians(lp, sol, Vector()), mesval::InvalidInput);
}
