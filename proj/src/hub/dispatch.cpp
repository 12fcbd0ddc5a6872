#include "mesval/hub/dispatch.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::hub {

namespace {

constexpr const char* kModule = "energy_hub";
using lp::LpRow;
using lp::LpSpec;
using lp::Sense;

HourIndex absent() {
  HourIndex h;
  h.fill(-1);
  return h;
}

// Thin wrapper that remembers equality-row positions so balance rows can be
// located in the canonical form.
class SpecWriter {
 public:
  explicit SpecWriter(LpSpec& spec) : spec_(spec) {}

  int var(std::string name, double lo, double hi, double cost = 0.0, bool integer = false) {
    return spec_.add_variable({std::move(name), lo, hi, cost, integer});
  }
  const std::string& name(int j) const { return spec_.variables[j].name; }

  // Returns the equality-row index for equality rows, -1 otherwise.
  int row(std::string row_name, Sense sense, std::vector<lp::LpTerm> terms, double rhs,
          std::vector<lp::ParamTerm> params = {}) {
    spec_.add_row({std::move(row_name), sense, std::move(terms), rhs, std::move(params)});
    return sense == Sense::kEqual ? eq_rows_++ : -1;
  }
  // Rows added directly to the spec (piecewise blocks) still count.
  void sync() {
    eq_rows_ = 0;
    for (const auto& r : spec_.rows) eq_rows_ += r.sense == Sense::kEqual;
  }
  LpSpec& spec() { return spec_; }

 private:
  LpSpec& spec_;
  int eq_rows_ = 0;
};

struct StageNames {
  std::string tag;
  bool day_ahead = true;
};

// Network variables and per-hour flow equations of one stage.
void emit_network(SpecWriter& w, const HubConfig& cfg, const HubMatrices& m, StageIndex& idx, const StageNames& st) {
  const int nb = m.branches();
  const int ni = m.inputs();
  const int nc = static_cast<int>(m.converter_nodes.size());
  idx.flow.assign(nb, absent());
  idx.input.assign(ni, absent());
  idx.output.assign(kSectors, absent());
  idx.surplus.assign(kSectors, absent());
  idx.weights.assign(nc, {});
  idx.selectors.assign(nc, {});

  std::vector<double> branch_cap(nb, lp::kInf);
  for (int c = 0; c < nc; ++c)
    branch_cap[m.converter_primary_branch[c]] = cfg.nodes[m.converter_nodes[c]].converter.capacity;

  std::vector<PiecewiseCurve> curves(nc);
  for (int c = 0; c < nc; ++c) {
    const auto& spec = cfg.nodes[m.converter_nodes[c]].converter;
    if (spec.piecewise()) {
      curves[c] = piecewise_linearize(spec.efficiency_curve, spec.capacity, spec.segments);
      idx.weights[c].assign(curves[c].segments() + 1, absent());
      idx.selectors[c].assign(curves[c].segments(), absent());
    }
  }

  for (int t = 0; t < kHours; ++t) {
    for (int b = 0; b < nb; ++b)
      idx.flow[b][t] = w.var(fmt::format("{}.flow.{}.{}", st.tag, m.branch_labels[b], t), 0.0, branch_cap[b]);
    for (int k = 0; k < ni; ++k) {
      const auto& in = cfg.nodes[m.input_nodes[k]].input;
      const double price = st.day_ahead ? in.price_day_ahead[t] : 0.0;
      idx.input[k][t] = w.var(fmt::format("{}.in.{}.{}", st.tag, m.input_labels[k], t), 0.0, in.capacity, price);
    }
    for (int s = 0; s < kSectors; ++s) {
      if (m.output_nodes[s] < 0) continue;
      idx.output[s][t] = w.var(fmt::format("{}.out.{}.{}", st.tag, m.output_labels[s], t), 0.0, lp::kInf);
      if (cfg.nodes[m.output_nodes[s]].output.allow_surplus)
        idx.surplus[s][t] = w.var(fmt::format("{}.surplus.{}.{}", st.tag, m.output_labels[s], t), 0.0, lp::kInf);
    }

    for (int k = 0; k < ni; ++k) {
      std::vector<lp::LpTerm> terms{{w.name(idx.input[k][t]), -1.0}};
      for (int b = 0; b < nb; ++b)
        if (m.X(b, k) != 0.0) terms.push_back({w.name(idx.flow[b][t]), m.X(b, k)});
      w.row(fmt::format("{}.X.{}.{}", st.tag, m.input_labels[k], t), Sense::kEqual, std::move(terms), 0.0);
    }
    for (int s = 0; s < kSectors; ++s) {
      if (m.output_nodes[s] < 0) continue;
      std::vector<lp::LpTerm> terms{{w.name(idx.output[s][t]), -1.0}};
      for (int b = 0; b < nb; ++b)
        if (m.Y(b, s) != 0.0) terms.push_back({w.name(idx.flow[b][t]), m.Y(b, s)});
      w.row(fmt::format("{}.Y.{}.{}", st.tag, m.output_labels[s], t), Sense::kEqual, std::move(terms), 0.0);
    }
    for (int r = 0; r < m.Z.rows(); ++r) {
      std::vector<lp::LpTerm> terms;
      for (int b = 0; b < nb; ++b)
        if (m.Z(r, b) != 0.0) terms.push_back({w.name(idx.flow[b][t]), m.Z(r, b)});
      w.row(fmt::format("{}.Z.{}.{}", st.tag, m.z_labels[r], t), Sense::kEqual, std::move(terms), 0.0);
    }
    for (int c = 0; c < nc; ++c) {
      if (curves[c].output.empty()) continue;
      // Copies: emitting new variables may reallocate the name storage.
      const std::string in = w.name(idx.flow[m.converter_in_branch[c]][t]);
      const std::string out = w.name(idx.flow[m.converter_primary_branch[c]][t]);
      const auto block = emit_piecewise(
          w.spec(), curves[c], fmt::format("{}.pw.{}.{}", st.tag, cfg.nodes[m.converter_nodes[c]].name, t), in, out);
      w.sync();
      for (std::size_t k = 0; k < block.weights.size(); ++k) idx.weights[c][k][t] = block.weights[k];
      for (std::size_t k = 0; k < block.selectors.size(); ++k) idx.selectors[c][k][t] = block.selectors[k];
    }
  }
}

std::vector<int> storages_at(const HubConfig& cfg, int node) {
  std::vector<int> out;
  for (std::size_t s = 0; s < cfg.storages.size(); ++s)
    if (cfg.storages[s].node == node) out.push_back(static_cast<int>(s));
  return out;
}

// Day-ahead block: network, planned storage and balance rows on the forecast
// parameter slots.
void emit_day_ahead(SpecWriter& w, const HubConfig& cfg, const HubMatrices& m, DispatchProblem& p) {
  StageIndex& idx = p.day_ahead;
  emit_network(w, cfg, m, idx, {"da", true});
  const int ns = static_cast<int>(cfg.storages.size());
  idx.charge.assign(ns, absent());
  idx.discharge.assign(ns, absent());
  idx.soc.assign(ns, absent());
  idx.mode.assign(ns, absent());
  for (int s = 0; s < ns; ++s) {
    const auto& st = cfg.storages[s];
    for (int t = 0; t < kHours; ++t) {
      idx.charge[s][t] = w.var(fmt::format("da.ch.{}.{}", st.name, t), 0.0, st.max_power, st.cost_charge);
      idx.discharge[s][t] = w.var(fmt::format("da.dis.{}.{}", st.name, t), 0.0, st.max_power, st.cost_discharge);
      const double lo = (t == kHours - 1 && cfg.terminal_soc_at_least_initial) ? st.initial_soc : 0.0;
      idx.soc[s][t] = w.var(fmt::format("da.soc.{}.{}", st.name, t), lo, st.capacity);
      if (st.binary) idx.mode[s][t] = w.var(fmt::format("da.mode.{}.{}", st.name, t), 0.0, 1.0, 0.0, true);
    }
    for (int t = 0; t < kHours; ++t) {
      const std::string ch = w.name(idx.charge[s][t]), dis = w.name(idx.discharge[s][t]);
      std::vector<lp::LpTerm> terms{{w.name(idx.soc[s][t]), 1.0}, {ch, -1.0}, {dis, 1.0}};
      if (t > 0) terms.push_back({w.name(idx.soc[s][t - 1]), -1.0});
      w.row(fmt::format("da.soc_rec.{}.{}", st.name, t), Sense::kEqual, std::move(terms), t == 0 ? st.initial_soc : 0.0);
      if (st.binary) {
        const std::string b = w.name(idx.mode[s][t]);
        w.row(fmt::format("da.ch_mode.{}.{}", st.name, t), Sense::kLessEqual, {{ch, 1.0}, {b, -st.max_power}}, 0.0);
        w.row(fmt::format("da.dis_mode.{}.{}", st.name, t), Sense::kLessEqual, {{dis, 1.0}, {b, st.max_power}},
              st.max_power);
      }
    }
  }
  p.day_ahead_balance_rows.assign(kSectors, absent());
  for (int t = 0; t < kHours; ++t) {
    for (int sec = 0; sec < kSectors; ++sec) {
      const int node = m.output_nodes[sec];
      if (node < 0) continue;
      std::vector<lp::LpTerm> terms{{w.name(idx.output[sec][t]), 1.0}};
      if (idx.surplus[sec][t] >= 0) terms.push_back({w.name(idx.surplus[sec][t]), -1.0});
      for (int s : storages_at(cfg, node)) {
        terms.push_back({w.name(idx.discharge[s][t]), 1.0});
        terms.push_back({w.name(idx.charge[s][t]), -1.0});
      }
      p.day_ahead_balance_rows[sec][t] = w.row(fmt::format("da.balance.{}.{}", m.output_labels[sec], t), Sense::kEqual,
                                               std::move(terms), 0.0, {{slot(sec, t), 1.0}});
    }
  }
}

// Intra-day block: realized network linked to the plan through reserves,
// storage adjustments and balance rows on the actual loads (parameter slots
// when `actual` is null, constants otherwise).
void emit_intra_day(SpecWriter& w, const HubConfig& cfg, const HubMatrices& m, DispatchProblem& p,
                    const Vector* actual) {
  const StageIndex& da = p.day_ahead;
  StageIndex& idx = p.intra_day;
  emit_network(w, cfg, m, idx, {"id", false});
  const int ni = m.inputs();
  const int nc = static_cast<int>(m.converter_nodes.size());
  const int ns = static_cast<int>(cfg.storages.size());

  p.up.assign(ni, absent());
  p.down.assign(ni, absent());
  for (int k = 0; k < ni; ++k) {
    const auto& in = cfg.nodes[m.input_nodes[k]].input;
    for (int t = 0; t < kHours; ++t) {
      p.up[k][t] = w.var(fmt::format("id.up.{}.{}", m.input_labels[k], t), 0.0, in.reserve_up, in.price_intra_day[t]);
      p.down[k][t] = w.var(fmt::format("id.down.{}.{}", m.input_labels[k], t), 0.0, in.reserve_down);
      w.row(fmt::format("id.reserve.{}.{}", m.input_labels[k], t), Sense::kEqual,
            {{w.name(idx.input[k][t]), 1.0},
             {w.name(da.input[k][t]), -1.0},
             {w.name(p.up[k][t]), -1.0},
             {w.name(p.down[k][t]), 1.0}},
            0.0);
    }
  }
  p.deviation.assign(nc, absent());
  for (int c = 0; c < nc; ++c) {
    const Node& node = cfg.nodes[m.converter_nodes[c]];
    const int b = m.converter_primary_branch[c];
    for (int t = 0; t < kHours; ++t) {
      p.deviation[c][t] = w.var(fmt::format("id.dev.{}.{}", node.name, t), -node.converter.reserve_down,
                                node.converter.reserve_up);
      w.row(fmt::format("id.redispatch.{}.{}", node.name, t), Sense::kEqual,
            {{w.name(idx.flow[b][t]), 1.0}, {w.name(da.flow[b][t]), -1.0}, {w.name(p.deviation[c][t]), -1.0}}, 0.0);
    }
  }

  idx.charge.assign(ns, absent());
  idx.discharge.assign(ns, absent());
  idx.soc.assign(ns, absent());
  idx.mode.assign(ns, absent());
  for (int s = 0; s < ns; ++s) {
    const auto& st = cfg.storages[s];
    for (int t = 0; t < kHours; ++t) {
      idx.charge[s][t] = w.var(fmt::format("id.ch.{}.{}", st.name, t), 0.0, st.max_power, st.cost_charge);
      idx.discharge[s][t] = w.var(fmt::format("id.dis.{}.{}", st.name, t), 0.0, st.max_power, st.cost_discharge);
      const double lo = (t == kHours - 1 && cfg.terminal_soc_at_least_initial) ? st.initial_soc : 0.0;
      idx.soc[s][t] = w.var(fmt::format("id.soc.{}.{}", st.name, t), lo, st.capacity);
      if (st.binary) idx.mode[s][t] = w.var(fmt::format("id.mode.{}.{}", st.name, t), 0.0, 1.0, 0.0, true);
    }
    for (int t = 0; t < kHours; ++t) {
      const std::string qch = w.name(idx.charge[s][t]), qdis = w.name(idx.discharge[s][t]);
      const std::string ch = w.name(da.charge[s][t]), dis = w.name(da.discharge[s][t]);
      std::vector<lp::LpTerm> terms{{w.name(idx.soc[s][t]), 1.0}, {ch, -1.0}, {dis, 1.0}, {qch, -1.0}, {qdis, 1.0}};
      if (t > 0) terms.push_back({w.name(idx.soc[s][t - 1]), -1.0});
      w.row(fmt::format("id.soc_rec.{}.{}", st.name, t), Sense::kEqual, std::move(terms), t == 0 ? st.initial_soc : 0.0);
      std::vector<lp::LpTerm> net{{ch, 1.0}, {dis, -1.0}, {qch, 1.0}, {qdis, -1.0}};
      w.row(fmt::format("id.net_max.{}.{}", st.name, t), Sense::kLessEqual, net, st.max_power);
      w.row(fmt::format("id.net_min.{}.{}", st.name, t), Sense::kGreaterEqual, net, -st.max_power);
      if (st.binary) {
        const std::string b = w.name(idx.mode[s][t]);
        w.row(fmt::format("id.ch_mode.{}.{}", st.name, t), Sense::kLessEqual, {{qch, 1.0}, {b, -st.max_power}}, 0.0);
        w.row(fmt::format("id.dis_mode.{}.{}", st.name, t), Sense::kLessEqual, {{qdis, 1.0}, {b, st.max_power}},
              st.max_power);
      }
    }
  }

  p.intra_day_balance_rows.assign(kSectors, absent());
  for (int t = 0; t < kHours; ++t) {
    for (int sec = 0; sec < kSectors; ++sec) {
      const int node = m.output_nodes[sec];
      if (node < 0) continue;
      std::vector<lp::LpTerm> terms{{w.name(idx.output[sec][t]), 1.0}};
      if (idx.surplus[sec][t] >= 0) terms.push_back({w.name(idx.surplus[sec][t]), -1.0});
      for (int s : storages_at(cfg, node)) {
        terms.push_back({w.name(da.discharge[s][t]), 1.0});
        terms.push_back({w.name(da.charge[s][t]), -1.0});
        terms.push_back({w.name(idx.discharge[s][t]), 1.0});
        terms.push_back({w.name(idx.charge[s][t]), -1.0});
      }
      const std::string name = fmt::format("id.balance.{}.{}", m.output_labels[sec], t);
      p.intra_day_balance_rows[sec][t] =
          actual ? w.row(name, Sense::kEqual, std::move(terms), (*actual)[slot(sec, t)])
                 : w.row(name, Sense::kEqual, std::move(terms), 0.0, {{slot(sec, t), 1.0}});
    }
  }
}

DispatchProblem finish(DispatchProblem p, const LpSpec& spec) {
  p.milp.base = lp::to_standard_form(spec);
  p.milp.integer_vars = lp::integer_indices(spec);
  p.var_names.reserve(spec.variables.size());
  for (const auto& v : spec.variables) p.var_names.push_back(v.name);
  return p;
}

DispatchProblem start(const HubConfig& config, Stage stage) {
  DispatchProblem p;
  p.stage = stage;
  p.config = std::make_shared<const HubConfig>(config);
  p.matrices = build_hub_matrices(config);
  return p;
}

double abs_max(double a, double b) { return std::max(a, std::abs(b)); }

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kDayAhead: return "day_ahead";
    case Stage::kIntraDay: return "intra_day";
    case Stage::kJoint: return "joint";
  }
  return "?";
}

void check_loads(const Vector& loads, const char* what) {
  if (loads.size() != kForecastSlots)
    throw InvalidInput(kModule, fmt::format("{} must have {} entries, got {}", what, kForecastSlots, loads.size()));
  for (int k = 0; k < kForecastSlots; ++k)
    if (!std::isfinite(loads[k]) || loads[k] < 0.0)
      throw InvalidInput(kModule, fmt::format("{} entry {} is {}; loads must be finite and >= 0", what, k, loads[k]));
}

DispatchProblem build_day_ahead(const HubConfig& config) {
  DispatchProblem p = start(config, Stage::kDayAhead);
  LpSpec spec;
  spec.param_dim = kForecastSlots;
  SpecWriter w(spec);
  emit_day_ahead(w, *p.config, p.matrices, p);
  p.day_ahead_vars = static_cast<int>(spec.variables.size());
  return finish(std::move(p), spec);
}

DispatchProblem build_intra_day(const Vector& plan, const HubConfig& config) {
  DispatchProblem p = start(config, Stage::kIntraDay);
  p.params_are_forecasts = false;

  // Rebuild the day-ahead block to get identical variable ordering, then keep
  // its variables only, pinned to the plan.
  LpSpec scratch;
  scratch.param_dim = kForecastSlots;
  SpecWriter sw(scratch);
  emit_day_ahead(sw, *p.config, p.matrices, p);
  p.day_ahead_vars = static_cast<int>(scratch.variables.size());
  p.day_ahead_balance_rows.clear();
  if (plan.size() < p.day_ahead_vars)
    throw InvalidInput(kModule, fmt::format("day-ahead plan has {} entries, expected {}", plan.size(), p.day_ahead_vars));

  LpSpec spec;
  spec.param_dim = kForecastSlots;
  spec.variables = scratch.variables;
  for (int j = 0; j < p.day_ahead_vars; ++j) {
    auto& v = spec.variables[j];
    double value = plan[j];
    if (!std::isfinite(value)) throw InvalidInput(kModule, "day-ahead plan has a non-finite entry");
    if (v.integer) value = std::round(value);
    value = std::clamp(value, v.lower, v.upper);
    v.lower = v.upper = value;
    v.cost = 0.0;
    v.integer = false;
  }
  SpecWriter w(spec);
  emit_intra_day(w, *p.config, p.matrices, p, nullptr);
  return finish(std::move(p), spec);
}

DispatchProblem build_joint(const Vector& actual, const HubConfig& config) {
  check_loads(actual, "actual loads");
  DispatchProblem p = start(config, Stage::kJoint);
  check_served(p.matrices, actual, "actual loads");
  p.actual = actual;
  LpSpec spec;
  spec.param_dim = kForecastSlots;
  SpecWriter w(spec);
  emit_day_ahead(w, *p.config, p.matrices, p);
  p.day_ahead_vars = static_cast<int>(spec.variables.size());
  emit_intra_day(w, *p.config, p.matrices, p, &actual);
  return finish(std::move(p), spec);
}

void check_served(const HubMatrices& m, const Vector& loads, const char* what) {
  for (int s = 0; s < kSectors; ++s)
    if (m.output_nodes[s] < 0)
      for (int t = 0; t < kHours; ++t)
        if (loads[slot(s, t)] != 0.0)
          throw InvalidInput(kModule, fmt::format("{}: sector {} has load at hour {} but the hub has no output for it",
                                                  what, s, t));
}

milp::MILPResult solve_dispatch(const DispatchProblem& problem, const Vector& params, const milp::BnbOptions& opts) {
  const char* what = problem.params_are_forecasts ? "forecast" : "actual loads";
  check_loads(params, what);
  check_served(problem.matrices, params, what);
  return milp::branch_and_bound(problem.milp, params, opts);
}

CostBreakdown dispatch_cost(const DispatchProblem& p, const Vector& z) {
  const Vector& c = p.milp.base.cost;
  CostBreakdown out;
  auto add = [&](double& acc, const std::vector<HourIndex>& vars) {
    for (const auto& h : vars)
      for (int j : h)
        if (j >= 0) acc += c[j] * z[j];
  };
  add(out.day_ahead, p.day_ahead.input);
  add(out.storage, p.day_ahead.charge);
  add(out.storage, p.day_ahead.discharge);
  add(out.intra_day, p.up);
  add(out.storage, p.intra_day.charge);
  add(out.storage, p.intra_day.discharge);
  out.day_ahead += p.milp.base.cost_offset;
  return out;
}

SequentialResult solve_sequential(const HubConfig& config, const Vector& forecast, const Vector& actual,
                                  const milp::BnbOptions& opts) {
  check_loads(actual, "actual loads");
  SequentialResult out;
  const auto da = build_day_ahead(config);
  out.day_ahead = solve_dispatch(da, forecast, opts);
  if (out.day_ahead.status != milp::MilpStatus::kOptimal) {
    out.cost = lp::kInf;
    return out;
  }
  const auto id = build_intra_day(out.day_ahead.z_star.head(da.day_ahead_vars), config);
  out.intra_day = solve_dispatch(id, actual, opts);
  out.cost = out.intra_day.status == milp::MilpStatus::kOptimal ? out.day_ahead.C_star + out.intra_day.C_star
                                                                   : lp::kInf;
  return out;
}

bool InvariantReport::ok(double tol) const {
  return conservation <= tol && balance <= tol && reserve <= 1e-9 + tol && soc_bounds <= tol &&
         soc_recursion <= tol && exclusivity <= tol && integrality <= 1e-6;
}

void InvariantReport::merge(const InvariantReport& o) {
  conservation = std::max(conservation, o.conservation);
  balance = std::max(balance, o.balance);
  reserve = std::max(reserve, o.reserve);
  soc_bounds = std::max(soc_bounds, o.soc_bounds);
  soc_recursion = std::max(soc_recursion, o.soc_recursion);
  exclusivity = std::max(exclusivity, o.exclusivity);
  integrality = std::max(integrality, o.integrality);
}

std::string InvariantReport::summary() const {
  return fmt::format(
      "conservation {:.3g} balance {:.3g} reserve {:.3g} soc_bounds {:.3g} soc_recursion {:.3g} exclusivity {:.3g} "
      "integrality {:.3g}",
      conservation, balance, reserve, soc_bounds, soc_recursion, exclusivity, integrality);
}

InvariantReport check_dispatch(const DispatchProblem& p, const Vector& z, const Vector& params) {
  const HubConfig& cfg = *p.config;
  const HubMatrices& m = p.matrices;
  InvariantReport rep;
  const int nb = m.branches();
  const int nc = static_cast<int>(m.converter_nodes.size());
  const int ns = static_cast<int>(cfg.storages.size());
  auto val = [&](int j) { return j >= 0 ? z[j] : 0.0; };

  auto network = [&](const StageIndex& idx) {
    for (int t = 0; t < kHours; ++t) {
      Vector v(nb);
      for (int b = 0; b < nb; ++b) v[b] = val(idx.flow[b][t]);
      const Vector xin = m.X.transpose() * v;
      for (int k = 0; k < m.inputs(); ++k) rep.conservation = abs_max(rep.conservation, xin[k] - val(idx.input[k][t]));
      const Vector yout = m.Y.transpose() * v;
      for (int s = 0; s < kSectors; ++s)
        if (m.output_nodes[s] >= 0) rep.conservation = abs_max(rep.conservation, yout[s] - val(idx.output[s][t]));
      if (m.Z.rows() > 0) rep.conservation = std::max(rep.conservation, (m.Z * v).cwiseAbs().maxCoeff());
      for (int c = 0; c < nc; ++c) {
        if (idx.weights[c].empty()) continue;
        const auto& spec = cfg.nodes[m.converter_nodes[c]].converter;
        const auto curve = piecewise_linearize(spec.efficiency_curve, spec.capacity, spec.segments);
        double out = 0.0, in = 0.0, wsum = 0.0;
        for (std::size_t k = 0; k < idx.weights[c].size(); ++k) {
          const double wk = val(idx.weights[c][k][t]);
          wsum += wk;
          out += wk * curve.output[k];
          in += wk * curve.input[k];
        }
        rep.conservation = abs_max(rep.conservation, out - v[m.converter_primary_branch[c]]);
        rep.conservation = abs_max(rep.conservation, in - v[m.converter_in_branch[c]]);
        rep.conservation = abs_max(rep.conservation, wsum - 1.0);
        // Integral selectors must make the weights follow the curve itself.
        rep.conservation =
            abs_max(rep.conservation, curve.input_at(v[m.converter_primary_branch[c]]) - v[m.converter_in_branch[c]]);
      }
      for (int s = 0; s < ns; ++s) {
        const double cap = cfg.storages[s].capacity;
        const double soc = val(idx.soc[s][t]);
        rep.soc_bounds = std::max({rep.soc_bounds, -soc, soc - cap});
        rep.exclusivity = std::max(rep.exclusivity, val(idx.charge[s][t]) * val(idx.discharge[s][t]));
      }
    }
  };

  const bool has_da = p.day_ahead.flow.size() == static_cast<std::size_t>(nb) && p.stage != Stage::kIntraDay;
  const bool has_id = p.stage != Stage::kDayAhead;
  if (has_da || p.stage == Stage::kIntraDay) network(p.day_ahead);
  if (has_id) network(p.intra_day);

  auto storage_net = [&](int s, int t, bool realized) {
    double net = val(p.day_ahead.charge[s][t]) - val(p.day_ahead.discharge[s][t]);
    if (realized) net += val(p.intra_day.charge[s][t]) - val(p.intra_day.discharge[s][t]);
    return net;
  };
  for (int s = 0; s < ns; ++s) {
    const double soc0 = cfg.storages[s].initial_soc;
    for (int t = 0; t < kHours; ++t) {
      if (has_da) {
        const double prev = t ? val(p.day_ahead.soc[s][t - 1]) : soc0;
        rep.soc_recursion = abs_max(rep.soc_recursion, val(p.day_ahead.soc[s][t]) - prev - storage_net(s, t, false));
      }
      if (has_id) {
        const double prev = t ? val(p.intra_day.soc[s][t - 1]) : soc0;
        rep.soc_recursion = abs_max(rep.soc_recursion, val(p.intra_day.soc[s][t]) - prev - storage_net(s, t, true));
      }
    }
  }

  const std::array<int, kSectors>& outs = m.output_nodes;
  for (int t = 0; t < kHours; ++t) {
    for (int sec = 0; sec < kSectors; ++sec) {
      if (outs[sec] < 0) continue;
      const auto at = storages_at(cfg, outs[sec]);
      if (has_da) {
        double supply = val(p.day_ahead.output[sec][t]) - val(p.day_ahead.surplus[sec][t]);
        for (int s : at) supply -= storage_net(s, t, false);
        rep.balance = abs_max(rep.balance, supply - params[slot(sec, t)]);
      }
      if (has_id) {
        double supply = val(p.intra_day.output[sec][t]) - val(p.intra_day.surplus[sec][t]);
        for (int s : at) supply -= storage_net(s, t, true);
        const double load = p.stage == Stage::kJoint ? p.actual[slot(sec, t)] : params[slot(sec, t)];
        rep.balance = abs_max(rep.balance, supply - load);
      }
    }
  }

  if (has_id) {
    for (int k = 0; k < m.inputs(); ++k) {
      const auto& in = cfg.nodes[m.input_nodes[k]].input;
      const double lim = std::max(in.reserve_up, in.reserve_down);
      for (int t = 0; t < kHours; ++t) {
        const double dev = val(p.intra_day.input[k][t]) - val(p.day_ahead.input[k][t]);
        rep.reserve = std::max(rep.reserve, std::abs(dev) - lim);
        rep.reserve = std::max({rep.reserve, dev - in.reserve_up, -dev - in.reserve_down});
      }
    }
    for (int c = 0; c < nc; ++c) {
      const auto& spec = cfg.nodes[m.converter_nodes[c]].converter;
      const int b = m.converter_primary_branch[c];
      for (int t = 0; t < kHours; ++t) {
        const double dev = val(p.intra_day.flow[b][t]) - val(p.day_ahead.flow[b][t]);
        rep.reserve = std::max({rep.reserve, dev - spec.reserve_up, -dev - spec.reserve_down});
      }
    }
  }
  for (int j : p.milp.integer_vars) rep.integrality = abs_max(rep.integrality, z[j] - std::round(z[j]));
  return rep;
}

}  // namespace mesval::hub
