#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "doctest.h"
#include "mesval/common/error.hpp"
#include "mesval/valuation/pipeline.hpp"
#include "shapley_oracle.hpp"

using namespace mesval;
using namespace mesval::valuation;

namespace {

const std::string kConfigDir = MESVAL_CONFIG_DIR;

// Costs in column order ehc, eh, ec, hc, e, h, c, empty (e = bit 0).
const std::vector<std::pair<Coalition, double>> kCaseCosts = {
    {7, 31294.04}, {3, 31291.83}, {5, 31311.15}, {6, 31403.95},
    {1, 31412.30}, {2, 31314.79}, {4, 31410.94}, {0, 31418.71}};
const std::vector<std::pair<Coalition, double>> kCaseValues = {
    {7, 124.66}, {3, 126.87}, {5, 107.56}, {6, 14.76}, {1, 6.40}, {2, 103.92}, {4, 7.77}, {0, 0.0}};

std::vector<double> case_values() {
  std::vector<double> v(8);
  for (auto [u, x] : kCaseValues) v[u] = x;
  return v;
}

std::vector<double> random_game(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-20.0, 100.0);
  std::vector<double> v(std::size_t{1} << n);
  for (std::size_t s = 1; s < v.size(); ++s) v[s] = u(rng);
  return v;
}

Scenario small_scenario(const nlohmann::json& hub_json, std::uint64_t seed) {
  Scenario sc;
  sc.hub = std::make_shared<hub::HubConfig>(hub::parse_hub_config(hub_json.dump()));
  sc.series = harness::synth_data(seed, 7, "2016-10-01");
  sc.train_days = {1, 2, 3, 4};
  sc.test_days = {5, 6};
  sc.training.hidden_size = 4;
  sc.training.epochs_mse = 30;
  sc.training.lr = 1e-2;
  sc.training.epochs_e2e = 1;
  sc.training.seed = seed;
  return sc;
}

nlohmann::json acceptance_hub() {
  std::ifstream f(kConfigDir + "/hub_acceptance.json");
  return nlohmann::json::parse(f);
}

}  // namespace

TEST_CASE("coalition labels") {
  const std::vector<std::string> s{"e", "h", "c"};
  CHECK(coalition_label(0, s) == "-");
  CHECK(coalition_label(5, s) == "ec");
  CHECK(parse_coalition("ehc", s) == 7);
  CHECK(parse_coalition("ch", s) == 6);
  CHECK(parse_coalition("none", s) == 0);
  CHECK_THROWS_AS(parse_coalition("ex", s), InvalidInput);
}

TEST_CASE("case-study value row from its cost row") {
  CoalitionLedger ledger({"e", "h", "c"});
  for (auto [u, c] : kCaseCosts) ledger.set_cost(u, c);
  REQUIRE(ledger.complete());
  for (auto [u, v] : kCaseValues) {
    INFO(coalition_label(u, ledger.sectors()));
    CHECK(std::abs(ledger.value(u) - v) <= 0.01 + 1e-9);
  }
  CHECK(ledger.value(0) == 0.0);
  CoalitionLedger partial({"e", "h", "c"});
  partial.set_cost(0, 1.0);
  CHECK_THROWS_AS(partial.value(3), InvalidInput);
  CHECK_THROWS_AS(partial.values(), InvalidInput);
}

TEST_CASE("zero-Shapley on the case-study values") {
  const auto v = zero_shapley(case_values(), 3);
  const auto oracle = oracle::zero_shapley_by_orderings(case_values(), 3);
  for (int n = 0; n < 3; ++n) CHECK(std::abs(v[n] - oracle[n]) <= 1e-12);
  // Frozen from an exact rational evaluation of the same formula.
  CHECK(std::abs(v[0] - 59.223333333333333) <= 1e-10);
  CHECK(std::abs(v[1] - 61.583333333333333) <= 1e-10);
  CHECK(std::abs(v[2] - 19.45) <= 1e-10);
  const auto a = normalize_allocation(v, 124.66);
  CHECK(std::abs(a.payout[0] - 52.637645744706134) <= 1e-9);
  CHECK(std::abs(a.payout[1] - 54.735211635810536) <= 1e-9);
  CHECK(std::abs(a.payout[2] - 17.28714261948333) <= 1e-9);
  CHECK(std::abs(a.payout[0] + a.payout[1] + a.payout[2] - 124.66) <= 1e-9);
}

TEST_CASE("zero-Shapley closed-form games") {
  std::vector<double> additive(8);
  for (Coalition s = 0; s < 8; ++s) additive[s] = std::popcount(s);
  for (double x : zero_shapley(additive, 3)) CHECK(std::abs(x - 1.0) <= 1e-15);

  // Sector 1 is a dummy.
  std::vector<double> dummy(8);
  for (Coalition s = 0; s < 8; ++s) dummy[s] = 3.0 * (s & 1) + 5.0 * ((s >> 2) & 1);
  const auto v = zero_shapley(dummy, 3);
  CHECK(v[1] == 0.0);
  CHECK(v[0] == doctest::Approx(3.0));
  CHECK(v[2] == doctest::Approx(5.0));

  CHECK_THROWS_AS(zero_shapley(std::vector<double>(7), 3), InvalidInput);
  std::vector<double> bad(8, 0.0);
  bad[0] = 1.0;
  CHECK_THROWS_AS(zero_shapley(bad, 3), InvalidInput);
  CHECK_THROWS_AS(zero_shapley(std::vector<double>(2), 21), InvalidInput);
}

TEST_CASE("zero-Shapley matches the ordering oracle on random games") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 == 0 ? 3 : 4;
    const auto game = random_game(n, rng);
    const auto v = zero_shapley(game, n);
    const auto o = oracle::zero_shapley_by_orderings(game, n);
    for (int p = 0; p < n; ++p) CHECK(std::abs(v[p] - o[p]) <= 1e-12);
  }
}

TEST_CASE("normalization") {
  auto a = normalize_allocation({1.0, 1.0, 2.0}, 8.0);
  CHECK(a.payout == std::vector<double>{2.0, 2.0, 4.0});
  a = normalize_allocation({5.0, 0.0, 0.0}, 7.0);
  CHECK(a.payout == std::vector<double>{7.0, 0.0, 0.0});
  a = normalize_allocation({0.0, 0.0, 0.0}, 0.0);
  CHECK(a.payout == std::vector<double>{0.0, 0.0, 0.0});
  CHECK_THROWS_AS(normalize_allocation({1.0, -0.5}, 1.0), InvariantViolation);
}

TEST_CASE("seed fan-out") {
  CHECK(derive_seed(5, "forecaster/e") == derive_seed(5, "forecaster/e"));
  CHECK(derive_seed(5, "forecaster/e") != derive_seed(5, "forecaster/h"));
  CHECK(derive_seed(5, "forecaster/e") != derive_seed(6, "forecaster/e"));
}

TEST_CASE("pipeline on a small synthetic scenario") {
  Pipeline p(small_scenario(acceptance_hub(), 3));
  const auto& sc = p.scenario();
  const auto base = p.train_base();

  SUBCASE("empty coalition and zero epochs leave the models alone") {
    const auto same = p.train_end_to_end(0, base);
    for (int s = 0; s < 3; ++s) CHECK(same[s].params.flatten() == base[s].params.flatten());
    Scenario no_epochs = sc;
    no_epochs.training.epochs_e2e = 0;
    Pipeline q(no_epochs);
    const auto kept = q.train_end_to_end(7, base);
    for (int s = 0; s < 3; ++s) CHECK(kept[s].params.flatten() == base[s].params.flatten());
  }
  SUBCASE("evaluation is repeatable and bounded by the ideal") {
    const auto a = p.evaluate(base, sc.test_days);
    const auto b = p.evaluate(p.train_end_to_end(0, base), sc.test_days);
    CHECK(a.total == b.total);
    CHECK(p.evaluate(base, {}).total == 0.0);
    const auto ideal = p.evaluate_ideal(sc.test_days);
    for (std::size_t i = 0; i < a.days.size(); ++i) CHECK(ideal.days[i].cost <= a.days[i].cost + 1e-9);
    INFO(a.invariants.summary());
    CHECK(a.invariants.ok());
    // The ideal equals the day-ahead optimum on the actual loads.
    const auto da = hub::build_day_ahead(*sc.hub);
    double direct = 0.0;
    for (int d : sc.test_days) direct += hub::solve_dispatch(da, p.actual(d)).C_star;
    CHECK(std::abs(ideal.total - direct) <= 1e-9 * (1.0 + direct));
  }
  SUBCASE("training touches only the coalition") {
    TrainLog log;
    const auto m = p.train_end_to_end(2, base, &log);  // heat only
    CHECK(m[0].params.flatten() == base[0].params.flatten());
    CHECK(m[2].params.flatten() == base[2].params.flatten());
    CHECK(m[1].params.flatten() != base[1].params.flatten());
    CHECK(log.dispatches == static_cast<int>(sc.train_days.size()));
    CHECK(log.epoch_cost.size() == 1);
    CHECK(log.invariants.ok());
  }
  SUBCASE("joint cost never exceeds the sequential cost") {
    Scenario seq = sc;
    seq.mode = Mode::kSequential;
    Pipeline q(seq);
    const auto j = p.evaluate(base, sc.test_days);
    const auto s = q.evaluate(base, sc.test_days);
    for (std::size_t i = 0; i < j.days.size(); ++i) CHECK(j.days[i].cost <= s.days[i].cost + 1e-7);
    CHECK(s.invariants.ok());
  }
}

TEST_CASE("infeasible day is reported with its date") {
  auto hub = acceptance_hub();
  for (auto& n : hub["nodes"])
    if (n["name"] == "grid") {
      n["capacity"] = 50.0;
      n["reserve_up"] = 10.0;
      n["reserve_down"] = 10.0;
    }
  Pipeline p(small_scenario(hub, 1));
  const auto base = p.train_base();
  CHECK_THROWS_WITH_AS(p.evaluate(base, {5}), doctest::Contains("day 5 (2016-10-06)"), InfeasibleError);
}

TEST_CASE("valuation with forecast-independent costs pays nothing") {
  auto hub = acceptance_hub();
  for (auto& n : hub["nodes"])
    if (n["type"] == "input") n["price_day_ahead"] = 0.0;
  for (auto& s : hub["storages"]) {
    s["cost_charge"] = 0.0;
    s["cost_discharge"] = 0.0;
  }
  Pipeline p(small_scenario(hub, 2));
  const auto r = full_valuation(p);
  for (Coalition u = 0; u < 8; ++u) CHECK(r.ledger.value(u) == 0.0);
  for (double x : r.allocation.payout) CHECK(x == 0.0);
}

TEST_CASE("full valuation balances the budget") {
  Pipeline p(small_scenario(acceptance_hub(), 4));
  const auto r = full_valuation(p);
  REQUIRE(r.ledger.complete());
  CHECK(r.ledger.value(0) == 0.0);
  const double vn = r.ledger.value(r.ledger.grand());
  const double paid = std::accumulate(r.allocation.payout.begin(), r.allocation.payout.end(), 0.0);
  if (std::accumulate(r.allocation.raw.begin(), r.allocation.raw.end(), 0.0) > 0.0) CHECK(std::abs(paid - vn) <= 1e-9);
  // Every coalition starts from the same base snapshot.
  CHECK(r.test_evaluations[0].total == p.evaluate(r.base, p.scenario().test_days).total);
  for (Coalition u = 0; u < 8; ++u) {
    CHECK(r.ideal.total <= r.test_evaluations[u].total + 1e-9);
    CHECK(r.test_evaluations[u].invariants.ok());
  }
}
