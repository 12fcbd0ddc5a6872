#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mesval/milp/branch_and_bound.hpp"

namespace mesval::harness {

struct BatteryResult {
  std::string name;
  int instances = 0;  // instances compared
  int checked = 0;    // scalar comparisons
  int skipped = 0;    // kinks, inapplicable oracles, instances without an optimum
  double worst = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::vector<std::string> failures;  // first few only

  bool passed() const { return failures.empty() && instances > 0; }
  std::string summary() const;
  void fail(std::string what);
};

/// Boxed LP with `q` inequality and `r` equality rows around a random
/// interior point, so it is feasible for M near 0; every row gets a random
/// right-hand-side parameter Jacobian of width `p`.
lp::LPStandardForm random_feasible_lp(std::mt19937_64& rng, int n, int q, int r, int p);

/// `nb` binaries then `nc` boxed continuous variables, `q` random rows plus
/// on/off links between pairs, feasible at M = 0.
milp::MILPProblem random_binary_milp(std::mt19937_64& rng, int nb, int nc, int q, int p);

/// KKT cost gradient vs. re-solved central differences on `count` LPs with
/// at most 10 variables and 8 inequality rows. Relative error
/// |g - fd| / max(1, |fd|) on parameters without a detected kink.
BatteryResult lp_gradient_battery(std::uint64_t seed, int count = 100, double tol = 1e-4);

/// Same instances: KKT gradient vs. dual (envelope) gradient on strictly
/// complementary, nondegenerate optima, absolute error.
BatteryResult lp_envelope_battery(std::uint64_t seed, int count = 100, double tol = 1e-10);

/// Branch and bound vs. enumeration of every binary assignment on `count`
/// instances that have an optimum (at most 10 binaries).
BatteryResult milp_enumeration_battery(std::uint64_t seed, int count = 100, double tol = 1e-9);

/// Two-stage gradient (differentiate the winning node afterwards) vs.
/// embedded gradient (differentiate at every incumbent update), componentwise.
BatteryResult embedded_gradient_battery(std::uint64_t seed, int count = 50, double tol = 1e-12);

/// BPTT vs. five-point central differences over every flattened parameter on
/// random cells (hidden <= 8, window <= 12).
BatteryResult lstm_bptt_battery(std::uint64_t seed, int count = 20, double tol = 1e-4);

std::vector<BatteryResult> all_batteries(std::uint64_t seed);

}  // namespace mesval::harness
