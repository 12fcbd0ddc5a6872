#include "mesval/valuation/pipeline.hpp"

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::valuation {

namespace {

constexpr const char* kModule = "valuation";

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

milp::BnbOptions solver_options() {
  milp::BnbOptions o;
  o.warm_start = true;
  return o;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return splitmix(seed ^ splitmix(h));
}

void Scenario::validate() const {
  if (!hub) throw InvalidInput(kModule, "scenario without hub config");
  training.validate();
  if (series.size() == 0) throw InvalidInput(kModule, "empty load series");
  if (series.time.front() % 24 != 0) throw InvalidInput(kModule, "load series must start at midnight");
  auto check = [&](const std::vector<int>& days, const char* what) {
    for (int d : days) {
      if (24 * d < training.window)
        throw InvalidInput(kModule, fmt::format("{} day {} has no full {}-hour feature window", what, d,
                                                training.window));
      if (d >= series.days()) throw InvalidInput(kModule, fmt::format("{} day {} outside the series", what, d));
    }
  };
  check(train_days, "training");
  check(test_days, "test");
}

Pipeline::Pipeline(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  weekday0_ = harness::weekday(scenario_.series.time.front());
}

std::vector<std::string> Pipeline::sector_labels() const {
  return {harness::kSectorLabels.begin(), harness::kSectorLabels.end()};
}

Vector Pipeline::actual(int day) const {
  Vector a(hub::kForecastSlots);
  for (int s = 0; s < hub::kSectors; ++s)
    for (int t = 0; t < hub::kHours; ++t) a[hub::slot(s, t)] = scenario_.series.load[s][24 * day + t];
  return a;
}

Vector Pipeline::forecast(const Models& models, int day,
                          std::array<forecast::DayForward, hub::kSectors>* fwd) const {
  Vector f(hub::kForecastSlots);
  for (int s = 0; s < hub::kSectors; ++s) {
    const auto& m = models[s];
    auto d = m.forward(forecast::make_window(scenario_.series.load[s], 24 * day, scenario_.training.window, weekday0_,
                                             m.norm));
    f.segment(s * hub::kHours, hub::kHours) = d.forecast;
    if (fwd) (*fwd)[s] = std::move(d);
  }
  return f;
}

std::vector<forecast::Sample> Pipeline::samples(int sector, const std::vector<int>& days,
                                                const forecast::Normalization& norm) const {
  std::vector<forecast::Sample> out;
  const auto& load = scenario_.series.load[sector];
  for (int d : days) {
    Vector target(hub::kHours);
    for (int t = 0; t < hub::kHours; ++t) target[t] = load[24 * d + t];
    out.push_back({forecast::make_window(load, 24 * d, scenario_.training.window, weekday0_, norm), target});
  }
  return out;
}

Models Pipeline::train_base() const {
  Models models;
  const auto labels = sector_labels();
  for (int s = 0; s < hub::kSectors; ++s) {
    std::vector<double> seen;
    for (int d : scenario_.train_days)
      for (int t = 0; t < hub::kHours; ++t) seen.push_back(scenario_.series.load[s][24 * d + t]);
    if (seen.empty()) throw InvalidInput(kModule, "no training days");
    const auto norm = forecast::Normalization::fit(seen);
    auto cfg = scenario_.training;
    cfg.seed = derive_seed(scenario_.training.seed, "forecaster/" + labels[s]);
    models[s] = forecast::train_mse(samples(s, scenario_.train_days, norm), norm, cfg, labels[s]).model;
  }
  return models;
}

const hub::DispatchProblem& Pipeline::joint(int day) {
  auto it = joint_.find(day);
  if (it == joint_.end()) it = joint_.emplace(day, hub::build_joint(actual(day), *scenario_.hub)).first;
  return it->second;
}

Evaluation Pipeline::evaluate_forecasts(const std::vector<int>& days, const std::function<Vector(int)>& forecast_of) {
  Evaluation ev;
  auto opts = solver_options();
  lp::BasisState cache;
  const hub::HubConfig& cfg = *scenario_.hub;
  std::optional<hub::DispatchProblem> da;
  for (int d : days) {
    const Vector fc = forecast_of(d);
    const auto start = scenario_.series.day_start(d);
    auto fail = [&](const char* stage, milp::MilpStatus st) {
      throw InfeasibleError(kModule, fmt::format("day {} ({}): {} dispatch {}", d,
                                                 harness::format_timestamp(start).substr(0, 10), stage,
                                                 milp::to_string(st)));
    };
    DayCost dc{d, start, 0.0, 0};
    if (scenario_.mode == Mode::kJoint) {
      opts.root_basis = &cache;
      const auto& p = joint(d);
      const auto res = hub::solve_dispatch(p, fc, opts);
      if (res.status != milp::MilpStatus::kOptimal) fail("joint", res.status);
      ev.invariants.merge(hub::check_dispatch(p, res.z_star, fc));
      ++ev.dispatches;
      dc.cost = res.C_star;
      dc.nodes = static_cast<int>(res.node_count);
    } else {
      // Day-ahead and intra-day problems differ in structure: no shared root basis.
      opts.root_basis = nullptr;
      if (!da) da = hub::build_day_ahead(cfg);
      const auto plan = hub::solve_dispatch(*da, fc, opts);
      if (plan.status != milp::MilpStatus::kOptimal) fail("day-ahead", plan.status);
      ev.invariants.merge(hub::check_dispatch(*da, plan.z_star, fc));
      const auto id = hub::build_intra_day(plan.z_star.head(da->day_ahead_vars), cfg);
      const Vector act = actual(d);
      const auto rt = hub::solve_dispatch(id, act, opts);
      if (rt.status != milp::MilpStatus::kOptimal) fail("intra-day", rt.status);
      ev.invariants.merge(hub::check_dispatch(id, rt.z_star, act));
      ev.dispatches += 2;
      dc.cost = plan.C_star + rt.C_star;
      dc.nodes = static_cast<int>(plan.node_count + rt.node_count);
    }
    ev.total += dc.cost;
    ev.days.push_back(dc);
  }
  return ev;
}

Evaluation Pipeline::evaluate(const Models& models, const std::vector<int>& days) {
  return evaluate_forecasts(days, [&](int d) { return forecast(models, d); });
}

Evaluation Pipeline::evaluate_ideal(const std::vector<int>& days) {
  return evaluate_forecasts(days, [&](int d) { return actual(d); });
}

Models Pipeline::train_end_to_end(Coalition u, const Models& initial, TrainLog* log) {
  Models models = initial;
  const auto& tc = scenario_.training;
  if (u == 0 || tc.epochs_e2e == 0) return models;
  if (u >= (1u << hub::kSectors)) throw InvalidInput(kModule, fmt::format("coalition {} out of range", u));
  auto opts = solver_options();
  lp::BasisState cache;
  opts.root_basis = &cache;
  for (int e = 0; e < tc.epochs_e2e; ++e) {
    double seen = 0.0;
    for (int d : scenario_.train_days) {
      std::array<forecast::DayForward, hub::kSectors> fwd;
      const Vector fc = forecast(models, d, &fwd);
      const auto& p = joint(d);
      const auto res = hub::solve_dispatch(p, fc, opts);
      if (res.status != milp::MilpStatus::kOptimal)
        throw InfeasibleError(kModule, fmt::format("training day {}: joint dispatch {}", d, milp::to_string(res.status)));
      seen += res.C_star;
      const auto g = milp::backward_optimal_subproblem(res, fc);
      if (log) {
        log->invariants.merge(hub::check_dispatch(p, res.z_star, fc));
        ++log->dispatches;
        if (g.degenerate) ++log->degenerate;
      }
      for (int s = 0; s < hub::kSectors; ++s) {
        if (!(u & (1u << s))) continue;
        const Vector gs = g.dcost_dM.segment(s * hub::kHours, hub::kHours) / kCurrencyPerKcny;
        models[s].params.axpy(-tc.lr_e2e, forecast::backward_day(fwd[s], models[s].params, gs));
      }
    }
    if (log) log->epoch_cost.push_back(seen);
  }
  return models;
}

std::array<forecast::ForecastMetrics, hub::kSectors> forecast_metrics(const Pipeline& p, const Models& m,
                                                                      const std::vector<int>& days) {
  std::array<std::vector<double>, hub::kSectors> f, a;
  for (int d : days) {
    const Vector fc = p.forecast(m, d);
    const Vector ac = p.actual(d);
    for (int s = 0; s < hub::kSectors; ++s)
      for (int t = 0; t < hub::kHours; ++t) {
        f[s].push_back(fc[hub::slot(s, t)]);
        a[s].push_back(ac[hub::slot(s, t)]);
      }
  }
  std::array<forecast::ForecastMetrics, hub::kSectors> out;
  for (int s = 0; s < hub::kSectors; ++s) out[s] = forecast::metrics(f[s], a[s]);
  return out;
}

ValuationReport full_valuation(Pipeline& pipeline) { return full_valuation(pipeline, pipeline.train_base()); }

ValuationReport full_valuation(Pipeline& pipeline, const Models& base) {
  ValuationReport r;
  r.ledger = CoalitionLedger(pipeline.sector_labels());
  const auto& test = pipeline.scenario().test_days;
  const Coalition count = 1u << hub::kSectors;
  r.base = base;
  r.coalition_models.resize(count);
  r.test_evaluations.resize(count);
  r.train_logs.resize(count);
  for (Coalition u = 0; u < count; ++u) {
    r.coalition_models[u] = pipeline.train_end_to_end(u, r.base, &r.train_logs[u]);
    r.test_evaluations[u] = pipeline.evaluate(r.coalition_models[u], test);
    r.ledger.set_cost(u, r.test_evaluations[u].total / kCurrencyPerKcny);
  }
  r.ideal = pipeline.evaluate_ideal(test);
  const auto values = r.ledger.values();
  r.allocation = normalize_allocation(zero_shapley(values, r.ledger.players()), values[r.ledger.grand()]);
  return r;
}

}  // namespace mesval::valuation
