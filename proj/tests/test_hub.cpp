#include <cmath>
#include <random>

#include <json.hpp>

#include "doctest.h"
#include "mesval/common/error.hpp"
#include "mesval/diffopt/sensitivity.hpp"
#include "mesval/hub/dispatch.hpp"

using namespace mesval;
using namespace mesval::hub;
using nlohmann::json;

namespace {

const std::string kConfigDir = MESVAL_CONFIG_DIR;

json input_node(const std::string& name, const std::string& carrier, double price, double reserve) {
  return {{"name", name},         {"type", "input"},        {"carrier", carrier},          {"capacity", 5000.0},
          {"reserve_up", reserve}, {"reserve_down", reserve}, {"price_day_ahead", price}, {"intra_day_multiplier", 1.5}};
}

json output_node(const std::string& name, const std::string& carrier) {
  return {{"name", name}, {"type", "output"}, {"carrier", carrier}};
}

json boiler_hub(double eta) {
  json cfg;
  cfg["schema_version"] = 1;
  cfg["nodes"] = {input_node("gas", "gas", 0.3, 1000.0),
                  {{"name", "boiler"},
                   {"type", "converter"},
                   {"kind", "gas_boiler"},
                   {"capacity", 1000.0},
                   {"efficiency", eta},
                   {"reserve_up", 500.0},
                   {"reserve_down", 500.0}},
                  output_node("heat", "heat")};
  cfg["branches"] = {{{"from", "gas"}, {"to", "boiler"}}, {{"from", "boiler"}, {"to", "heat"}}};
  return cfg;
}

// Grid straight to the electric load, optionally with a battery.
json grid_hub(double reserve, bool battery) {
  json cfg;
  cfg["schema_version"] = 1;
  json grid = input_node("grid", "electricity", 0.5, reserve);
  std::vector<double> prices(kHours);
  for (int t = 0; t < kHours; ++t) prices[t] = 0.4 + 0.05 * (t % 5);
  grid["price_day_ahead"] = prices;
  cfg["nodes"] = {grid, output_node("load", "electricity")};
  cfg["branches"] = {{{"from", "grid"}, {"to", "load"}}};
  if (battery)
    cfg["storages"] = {{{"name", "battery"},
                        {"node", "load"},
                        {"capacity", 100.0},
                        {"max_power", 50.0},
                        {"cost_charge", 0.01},
                        {"cost_discharge", 0.01},
                        {"initial_soc", 0.0}}};
  return cfg;
}

HubConfig parse(const json& j) { return parse_hub_config(j.dump()); }

Vector zeros() { return Vector::Zero(kForecastSlots); }

Vector random_loads(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(kForecastSlots);
  for (int t = 0; t < kHours; ++t) {
    const double ph = 2.0 * M_PI * (t - 6) / 24.0;
    v[slot(0, t)] = 700.0 + 250.0 * std::sin(ph) + 80.0 * u(rng);
    v[slot(1, t)] = 550.0 + 250.0 * std::cos(ph) + 80.0 * u(rng);
    v[slot(2, t)] = 400.0 + 250.0 * std::sin(ph) + 80.0 * u(rng);
  }
  return v;
}

milp::BnbOptions hub_opts() {
  milp::BnbOptions o;
  o.warm_start = true;
  return o;
}

}  // namespace

TEST_CASE("single gas boiler matrices") {
  const auto m = build_hub_matrices(parse(boiler_hub(0.9)));
  REQUIRE(m.X.rows() == 2);
  REQUIRE(m.X.cols() == 1);
  CHECK(m.X(0, 0) == 1.0);
  CHECK(m.X(1, 0) == 0.0);
  CHECK(m.Y(0, 1) == 0.0);
  CHECK(m.Y(1, 1) == 1.0);
  CHECK(m.Y.col(0).isZero());
  CHECK(m.Y.col(2).isZero());
  REQUIRE(m.Z.rows() == 1);
  CHECK(m.Z(0, 0) == 0.9);
  CHECK(m.Z(0, 1) == -1.0);
}

TEST_CASE("shipped topology dimensions match a hand count") {
  const auto cfg = load_hub_config(kConfigDir + "/hub_default.json");
  const auto m = build_hub_matrices(cfg);
  // grid->bus, gas->chp, gas->boiler, chp->{power,heat,cooling}, boiler->heat,
  // bus->e-boiler, e-boiler->heat, bus->fridge, fridge->cooling, three loads
  CHECK(m.branches() == 14);
  CHECK(m.inputs() == 2);
  CHECK(m.Y.cols() == 3);
  // three buses + CHP heat coupling; all converters are piecewise
  CHECK(m.Z.rows() == 4);
  // every branch appears in some row
  for (int b = 0; b < m.branches(); ++b)
    CHECK(m.X.row(b).cwiseAbs().sum() + m.Y.row(b).cwiseAbs().sum() + m.Z.col(b).cwiseAbs().sum() > 0.0);
  CHECK(cfg.storages.size() == 3);
}

TEST_CASE("topology errors") {
  json bad = boiler_hub(0.9);
  bad["nodes"].push_back(output_node("cold", "cooling"));
  CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("disconnected node"), InvalidInput);

  json chp;
  chp["schema_version"] = 1;
  chp["nodes"] = {input_node("gas", "gas", 0.3, 10.0),
                  {{"name", "chp"},
                   {"type", "converter"},
                   {"kind", "chp"},
                   {"capacity", 100.0},
                   {"efficiency", 0.35},
                   {"heat_to_power_ratio", 1.2},
                   {"reserve_up", 0.0},
                   {"reserve_down", 0.0}},
                  output_node("power", "electricity")};
  chp["branches"] = {{{"from", "gas"}, {"to", "chp"}}, {{"from", "chp"}, {"to", "power"}}};
  CHECK_THROWS_WITH_AS(parse(chp), doctest::Contains("port without branch"), InvalidInput);

  json version = boiler_hub(0.9);
  version["schema_version"] = 2;
  CHECK_THROWS_AS(parse(version), InvalidInput);

  json price = grid_hub(10.0, false);
  price["nodes"][0]["intra_day_multiplier"] = 0.9;
  CHECK_THROWS_WITH_AS(parse(price), doctest::Contains("intra-day price below"), InvalidInput);

  json eff = boiler_hub(1.7);
  CHECK_THROWS_AS(parse(eff), InvalidInput);
}

TEST_CASE("config round-trips through JSON") {
  const auto cfg = load_hub_config(kConfigDir + "/hub_default.json");
  const auto again = parse_hub_config(hub_config_to_json(cfg));
  CHECK(hub_config_to_json(again) == hub_config_to_json(cfg));
}

TEST_CASE("piecewise linearization") {
  SUBCASE("constant efficiency is reproduced exactly") {
    const std::vector<EfficiencyPoint> flat{{0.0, 0.9}, {1.0, 0.9}};
    for (int s : {1, 2, 5}) {
      const auto pc = piecewise_linearize(flat, 200.0, s);
      for (double p = 0.0; p <= 200.0; p += 7.0) CHECK(std::abs(pc.input_at(p) - p / 0.9) <= 1e-12);
    }
  }
  SUBCASE("breakpoint loads are exact, mid-segment error is the chord gap") {
    const std::vector<EfficiencyPoint> curve{{0.0, 0.8}, {0.5, 0.9}, {1.0, 0.85}};
    const double cap = 100.0;
    const auto pc = piecewise_linearize(curve, cap, 4);
    CHECK(std::abs(pc.input_at(50.0) - 50.0 / 0.9) <= 1e-12);
    CHECK(std::abs(pc.input_at(100.0) - 100.0 / 0.85) <= 1e-12);
    // Midpoint of [25, 50]: eta(0.25)=0.85, eta(0.375)=0.875, eta(0.5)=0.9
    const double chord = 0.5 * (25.0 / 0.85 + 50.0 / 0.9);
    const double exact = 37.5 / 0.875;
    CHECK(std::abs((pc.input_at(37.5) - exact_input(curve, cap, 37.5)) - (chord - exact)) <= 1e-12);
    CHECK(std::abs(chord - exact) > 1e-2);
  }
  CHECK_THROWS_AS(piecewise_linearize({{0.0, 0.9}, {1.0, 0.8}}, 10.0, 0), InvalidInput);
  CHECK_THROWS_AS(piecewise_linearize({{1.0, 0.9}}, 10.0, 2), InvalidInput);
}

TEST_CASE("piecewise block selects one segment in the MILP") {
  // Concave input curve: without selectors the LP would use the chord.
  const std::vector<EfficiencyPoint> curve{{0.0, 0.5}, {1.0, 0.9}};
  const auto pc = piecewise_linearize(curve, 100.0, 2);
  lp::LpSpec spec;
  spec.param_dim = 1;
  spec.add_variable({"in", 0.0, lp::kInf, 1.0});
  spec.add_variable({"out", 0.0, 100.0, 0.0});
  emit_piecewise(spec, pc, "pw", "in", "out");
  spec.add_row({"demand", lp::Sense::kGreaterEqual, {{"out", 1.0}}, 0.0, {{0, 1.0}}});
  milp::MILPProblem prob{lp::to_standard_form(spec), lp::integer_indices(spec)};
  for (double d : {10.0, 30.0, 50.0, 80.0}) {
    Vector m(1);
    m << d;
    const auto res = milp::branch_and_bound(prob, m);
    REQUIRE(res.status == milp::MilpStatus::kOptimal);
    CHECK(std::abs(res.C_star - pc.input_at(d)) <= 1e-7);
  }
}

TEST_CASE("day-ahead basics") {
  const auto cfg = parse(boiler_hub(0.9));
  const auto da = build_day_ahead(cfg);
  CHECK(da.milp.base.param_dim == kForecastSlots);

  const auto zero = solve_dispatch(da, zeros(), hub_opts());
  REQUIRE(zero.status == milp::MilpStatus::kOptimal);
  CHECK(zero.C_star == doctest::Approx(0.0));
  CHECK(zero.z_star.cwiseAbs().maxCoeff() <= 1e-9);

  Vector neg = zeros();
  neg[slot(1, 3)] = -1.0;
  CHECK_THROWS_AS(solve_dispatch(da, neg, hub_opts()), InvalidInput);
  Vector unserved = zeros();
  unserved[slot(0, 3)] = 5.0;
  CHECK_THROWS_AS(solve_dispatch(da, unserved, hub_opts()), InvalidInput);
}

TEST_CASE("boiler cost gradient is price over efficiency") {
  const auto cfg = parse(boiler_hub(0.9));
  const auto da = build_day_ahead(cfg);
  Vector heat = zeros();
  for (int t = 0; t < kHours; ++t) heat[slot(1, t)] = 100.0 + 10.0 * t;
  const auto res = solve_dispatch(da, heat, hub_opts());
  REQUIRE(res.status == milp::MilpStatus::kOptimal);
  CHECK(std::abs(res.C_star - 0.3 / 0.9 * heat.sum()) <= 1e-8);
  const auto g = milp::backward_optimal_subproblem(res, heat);
  const auto fd = diffopt::finite_difference(
      [&](const Vector& m) -> std::optional<double> {
        const auto r = milp::branch_and_bound(da.milp, m);
        if (r.status != milp::MilpStatus::kOptimal) return std::nullopt;
        return r.C_star;
      },
      heat);
  for (int t = 0; t < kHours; ++t) {
    CHECK(std::abs(g.dcost_dM[slot(1, t)] - 0.3 / 0.9) <= 1e-9);
    CHECK(std::abs(fd.gradient[slot(1, t)] - 0.3 / 0.9) <= 1e-6);
  }
}

TEST_CASE("heat dispatch matches a brute-force grid") {
  // Gas boiler (0.3 / 0.9 per kWh heat) against electric boiler (price / 0.95)
  // with a 60 kW boiler cap: the cheaper unit runs at its cap first.
  json cfg = boiler_hub(0.9);
  cfg["nodes"][1]["capacity"] = 60.0;
  cfg["nodes"].push_back(input_node("grid", "electricity", 0.38, 1000.0));
  cfg["nodes"].push_back({{"name", "eboiler"},
                          {"type", "converter"},
                          {"kind", "electric_boiler"},
                          {"capacity", 200.0},
                          {"efficiency", 0.95},
                          {"reserve_up", 0.0},
                          {"reserve_down", 0.0}});
  cfg["branches"].push_back({{"from", "grid"}, {"to", "eboiler"}});
  cfg["branches"].push_back({{"from", "eboiler"}, {"to", "heat"}});
  const auto hub = parse(cfg);
  const auto da = build_day_ahead(hub);
  Vector heat = zeros();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> d(0, 200);
  for (int t = 0; t < kHours; ++t) heat[slot(1, t)] = d(rng);
  const auto res = solve_dispatch(da, heat, hub_opts());
  REQUIRE(res.status == milp::MilpStatus::kOptimal);

  double brute = 0.0;
  for (int t = 0; t < kHours; ++t) {
    const int h = static_cast<int>(heat[slot(1, t)]);
    double best = lp::kInf;
    for (int gb = 0; gb <= std::min(h, 60); ++gb) {
      const int eb = h - gb;
      if (eb > 200) continue;
      best = std::min(best, 0.3 * gb / 0.9 + 0.38 * eb / 0.95);
    }
    brute += best;
  }
  CHECK(std::abs(res.C_star - brute) <= 1e-7);
}

TEST_CASE("intra-day re-dispatch") {
  const auto cfg = parse(grid_hub(50.0, true));
  Vector forecast = zeros();
  for (int t = 0; t < kHours; ++t) forecast[slot(0, t)] = 200.0;
  const double f0 = cfg.nodes[0].input.price_day_ahead[0];
  const double id0 = cfg.nodes[0].input.price_intra_day[0];

  SUBCASE("perfect forecast needs no adjustment") {
    const auto seq = solve_sequential(cfg, forecast, forecast, hub_opts());
    REQUIRE(seq.intra_day.status == milp::MilpStatus::kOptimal);
    CHECK(seq.intra_day.C_star == doctest::Approx(0.0));
    const auto id = build_intra_day(seq.day_ahead.z_star, cfg);
    for (const auto& h : id.up)
      for (int j : h) CHECK(std::abs(seq.intra_day.z_star[j]) <= 1e-9);
    for (const auto& h : id.intra_day.charge)
      for (int j : h) CHECK(std::abs(seq.intra_day.z_star[j]) <= 1e-9);
  }
  SUBCASE("under-forecast within the reserve costs the price spread") {
    Vector actual = forecast;
    actual[slot(0, 0)] += 30.0;
    const auto seq = solve_sequential(cfg, forecast, actual, hub_opts());
    const auto ideal = solve_dispatch(build_day_ahead(cfg), actual, hub_opts());
    REQUIRE(seq.intra_day.status == milp::MilpStatus::kOptimal);
    CHECK(std::abs(seq.cost - ideal.C_star - 30.0 * (id0 - f0)) <= 1e-8);
  }
  SUBCASE("under-forecast beyond the reserve with an empty store is infeasible") {
    Vector actual = forecast;
    actual[slot(0, 0)] += 80.0;
    // Flat prices: the plan never charges, so nothing can be given back.
    json flat = grid_hub(50.0, true);
    flat["nodes"][0]["price_day_ahead"] = 0.5;
    const auto seq = solve_sequential(parse(flat), forecast, actual, hub_opts());
    CHECK(seq.intra_day.status == milp::MilpStatus::kInfeasible);
    CHECK(std::isinf(seq.cost));
  }
}

TEST_CASE("joint problem") {
  const auto cfg = parse(grid_hub(100.0, false));
  Vector actual = zeros();
  for (int t = 0; t < kHours; ++t) actual[slot(0, t)] = t == 5 || t == 6 ? 120.0 : 0.0;
  const auto joint = build_joint(actual, cfg);
  const auto ideal = solve_dispatch(build_day_ahead(cfg), actual, hub_opts());
  const auto same = solve_dispatch(joint, actual, hub_opts());
  REQUIRE(same.status == milp::MilpStatus::kOptimal);
  CHECK(std::abs(same.C_star - ideal.C_star) <= 1e-9);

  Vector forecast = actual;
  forecast[slot(0, 5)] = 90.0;   // under
  forecast[slot(0, 6)] = 150.0;  // over
  const auto off = solve_dispatch(joint, forecast, hub_opts());
  REQUIRE(off.status == milp::MilpStatus::kOptimal);
  CHECK(off.C_star >= ideal.C_star);
  // Grid-only plan is unique, so joint and sequential agree.
  const auto seq = solve_sequential(cfg, forecast, actual, hub_opts());
  CHECK(std::abs(off.C_star - seq.cost) <= 1e-9);
  const double f5 = cfg.nodes[0].input.price_day_ahead[5], f6 = cfg.nodes[0].input.price_day_ahead[6];
  CHECK(std::abs(off.C_star - (90.0 * f5 + 30.0 * 1.5 * f5 + 150.0 * f6)) <= 1e-9);

  const auto cost = dispatch_cost(joint, off.z_star);
  CHECK(std::abs(cost.total() - off.C_star) <= 1e-9);
  CHECK(std::abs(cost.intra_day - 30.0 * 1.5 * f5) <= 1e-9);
}

TEST_CASE("forecast and actual slots stay in their own stage") {
  const auto cfg = load_hub_config(kConfigDir + "/hub_acceptance.json");
  std::mt19937_64 rng(3);
  const auto joint = build_joint(random_loads(rng), cfg);
  const auto& base = joint.milp.base;
  CHECK(base.param_dim == kForecastSlots);
  CHECK(base.ineq_param.nonZeros() == 0);
  std::vector<int> owner(base.num_eq(), -1);
  for (int s = 0; s < kSectors; ++s)
    for (int t = 0; t < kHours; ++t) owner[joint.day_ahead_balance_rows[s][t]] = slot(s, t);
  const lp::SparseMatrix ph = base.eq_param;
  for (int k = 0; k < ph.outerSize(); ++k)
    for (lp::SparseMatrix::InnerIterator it(ph, k); it; ++it) CHECK(owner[it.row()] == it.col());
  CHECK(ph.nonZeros() == kForecastSlots);

  const auto da = build_day_ahead(cfg);
  const auto plan = solve_dispatch(da, random_loads(rng), hub_opts());
  REQUIRE(plan.status == milp::MilpStatus::kOptimal);
  const auto id = build_intra_day(plan.z_star.head(da.day_ahead_vars), cfg);
  std::vector<int> id_owner(id.milp.base.num_eq(), -1);
  for (int s = 0; s < kSectors; ++s)
    for (int t = 0; t < kHours; ++t) id_owner[id.intra_day_balance_rows[s][t]] = slot(s, t);
  const lp::SparseMatrix ip = id.milp.base.eq_param;
  for (int k = 0; k < ip.outerSize(); ++k)
    for (lp::SparseMatrix::InnerIterator it(ip, k); it; ++it) CHECK(id_owner[it.row()] == it.col());
}

TEST_CASE("acceptance hub: invariants, ideal bound, cost breakdown") {
  const auto cfg = load_hub_config(kConfigDir + "/hub_acceptance.json");
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.12);
  lp::BasisState cache;
  auto opts = hub_opts();
  opts.root_basis = &cache;
  for (int day = 0; day < 3; ++day) {
    const Vector actual = random_loads(rng);
    const auto joint = build_joint(actual, cfg);
    const auto ideal = solve_dispatch(joint, actual, opts);
    REQUIRE(ideal.status == milp::MilpStatus::kOptimal);
    const auto da_only = solve_dispatch(build_day_ahead(cfg), actual, opts);
    CHECK(std::abs(ideal.C_star - da_only.C_star) <= 1e-9 * (1.0 + std::abs(da_only.C_star)));
    for (int k = 0; k < 3; ++k) {
      Vector forecast = actual;
      for (int i = 0; i < kForecastSlots; ++i) forecast[i] = std::max(0.0, actual[i] * (1.0 + noise(rng)));
      const auto res = solve_dispatch(joint, forecast, opts);
      REQUIRE(res.status == milp::MilpStatus::kOptimal);
      CHECK(res.C_star >= ideal.C_star - 1e-9 * (1.0 + std::abs(ideal.C_star)));
      const auto rep = check_dispatch(joint, res.z_star, forecast);
      INFO(rep.summary());
      CHECK(rep.ok());
      const auto cost = dispatch_cost(joint, res.z_star);
      CHECK(std::abs(cost.total() - res.C_star) <= 1e-9 * (1.0 + std::abs(res.C_star)));
      CHECK(cost.intra_day >= 0.0);
    }
  }
}

TEST_CASE("day-ahead cost is monotone in every demand slot") {
  const auto cfg = load_hub_config(kConfigDir + "/hub_acceptance.json");
  const auto da = build_day_ahead(cfg);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pick(0, kForecastSlots - 1);
  lp::BasisState cache;
  auto opts = hub_opts();
  opts.root_basis = &cache;
  const Vector base = random_loads(rng);
  const auto r0 = solve_dispatch(da, base, opts);
  REQUIRE(r0.status == milp::MilpStatus::kOptimal);
  for (int k = 0; k < 15; ++k) {
    Vector bumped = base;
    const int s = pick(rng);
    bumped[s] += 40.0;
    const auto r1 = solve_dispatch(da, bumped, opts);
    REQUIRE(r1.status == milp::MilpStatus::kOptimal);
    INFO("slot " << s);
    CHECK(r1.C_star >= r0.C_star - 1e-9 * (1.0 + r0.C_star));
  }
}

TEST_CASE("canonical form of a day-ahead problem evaluates a hand-made dispatch") {
  const auto cfg = parse(grid_hub(10.0, false));
  const auto da = build_day_ahead(cfg);
  Vector load = zeros();
  for (int t = 0; t < kHours; ++t) load[slot(0, t)] = 10.0 * (t + 1);
  // Feasible point: every hour, grid flow = input = output = load.
  Vector z = Vector::Zero(da.milp.base.n_vars);
  for (int t = 0; t < kHours; ++t) {
    z[da.day_ahead.flow[0][t]] = load[slot(0, t)];
    z[da.day_ahead.input[0][t]] = load[slot(0, t)];
    z[da.day_ahead.output[0][t]] = load[slot(0, t)];
  }
  const auto& form = da.milp.base;
  if (form.num_ineq() > 0) CHECK(form.ineq_values(z, load).maxCoeff() <= 1e-12);
  CHECK(form.eq_values(z, load).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((z.array() >= form.lower.array()).all());
  CHECK((z.array() <= form.upper.array()).all());
}
