#include "mesval/hub/matrices.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::hub {

namespace {
constexpr const char* kModule = "energy_hub";
}

HubMatrices build_hub_matrices(const HubConfig& config) {
  config.validate();
  HubMatrices m;
  const int nb = static_cast<int>(config.branches.size());
  for (const auto& b : config.branches) m.branch_labels.push_back(b.name);

  m.input_nodes = config.nodes_of(NodeKind::kInput);
  m.output_nodes = config.output_nodes();
  m.converter_nodes = config.nodes_of(NodeKind::kConverter);
  for (int i : m.input_nodes) m.input_labels.push_back(config.nodes[i].name);
  for (int i : m.output_nodes) m.output_labels.push_back(i >= 0 ? config.nodes[i].name : "none");

  m.X = Matrix::Zero(nb, m.inputs());
  m.Y = Matrix::Zero(nb, kSectors);
  for (int b = 0; b < nb; ++b) {
    const auto& br = config.branches[b];
    for (int k = 0; k < m.inputs(); ++k)
      if (br.from == m.input_nodes[k]) m.X(b, k) = 1.0;
    for (int s = 0; s < kSectors; ++s)
      if (br.to == m.output_nodes[s]) m.Y(b, s) = 1.0;
  }

  std::vector<std::vector<double>> rows;
  auto new_row = [&](const std::string& label) -> std::vector<double>& {
    m.z_labels.push_back(label);
    rows.emplace_back(nb, 0.0);
    return rows.back();
  };
  for (int i : config.nodes_of(NodeKind::kBus)) {
    auto& row = new_row(config.nodes[i].name + ".balance");
    for (int b = 0; b < nb; ++b) {
      if (config.branches[b].to == i) row[b] += 1.0;
      if (config.branches[b].from == i) row[b] -= 1.0;
    }
  }
  for (int i : m.converter_nodes) {
    const Node& node = config.nodes[i];
    const auto& c = node.converter;
    int in = -1, primary = -1, heat = -1, cool = -1;
    for (int b = 0; b < nb; ++b) {
      const auto& br = config.branches[b];
      if (br.to == i) in = b;
      if (br.from == i) {
        if (br.carrier == c.primary_output()) primary = b;
        else if (br.carrier == Carrier::kHeat) heat = b;
        else if (br.carrier == Carrier::kCooling) cool = b;
      }
    }
    if (in < 0 || primary < 0) throw InvalidInput(kModule, "converter '" + node.name + "': port without branch");
    m.converter_in_branch.push_back(in);
    m.converter_primary_branch.push_back(primary);
    if (!c.piecewise()) {
      auto& row = new_row(node.name + ".conversion");
      row[in] = c.efficiency_curve.front().efficiency;
      row[primary] = -1.0;
    }
    if (c.kind == ConverterKind::kChp) {
      // Recovered heat = ratio * electricity, split between the heat port and
      // the absorption chiller (cooling = cop * absorbed heat).
      auto& row = new_row(node.name + ".heat_coupling");
      row[primary] = c.heat_to_power_ratio;
      row[heat] = -1.0;
      if (cool >= 0) row[cool] = -1.0 / c.absorption_cop;
    }
  }
  m.Z = Matrix::Zero(static_cast<int>(rows.size()), nb);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int b = 0; b < nb; ++b) m.Z(static_cast<int>(r), b) = rows[r][b];
  return m;
}

double PiecewiseCurve::input_at(double out) const {
  const int s = segments();
  if (out <= output.front()) return input.front();
  for (int k = 0; k < s; ++k) {
    if (out <= output[k + 1]) {
      const double w = (out - output[k]) / (output[k + 1] - output[k]);
      return (1.0 - w) * input[k] + w * input[k + 1];
    }
  }
  return input.back();
}

double efficiency_at(const std::vector<EfficiencyPoint>& curve, double x) {
  if (x <= curve.front().load_fraction) return curve.front().efficiency;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (x <= curve[k].load_fraction) {
      const auto& a = curve[k - 1];
      const auto& b = curve[k];
      const double w = (x - a.load_fraction) / (b.load_fraction - a.load_fraction);
      return (1.0 - w) * a.efficiency + w * b.efficiency;
    }
  }
  return curve.back().efficiency;
}

double exact_input(const std::vector<EfficiencyPoint>& curve, double capacity, double out) {
  if (out <= 0.0) return 0.0;
  return out / efficiency_at(curve, out / capacity);
}

PiecewiseCurve piecewise_linearize(const std::vector<EfficiencyPoint>& curve, double capacity, int segments) {
  if (segments < 1) throw InvalidInput(kModule, fmt::format("piecewise segments must be >= 1, got {}", segments));
  if (curve.size() < 2) throw InvalidInput(kModule, "piecewise linearization needs at least two breakpoints");
  if (!(capacity > 0.0)) throw InvalidInput(kModule, "piecewise linearization needs a positive capacity");
  PiecewiseCurve pc;
  for (int k = 0; k <= segments; ++k) {
    const double out = capacity * static_cast<double>(k) / segments;
    pc.output.push_back(out);
    pc.input.push_back(exact_input(curve, capacity, out));
  }
  return pc;
}

PiecewiseBlock emit_piecewise(lp::LpSpec& spec, const PiecewiseCurve& curve, const std::string& prefix,
                              const std::string& in_var, const std::string& out_var) {
  using lp::Sense;
  const int s = curve.segments();
  if (s < 1) throw InvalidInput(kModule, "piecewise block needs at least one segment");
  PiecewiseBlock block;
  std::vector<std::string> w(s + 1), y(s);
  for (int k = 0; k <= s; ++k) {
    w[k] = fmt::format("{}.w{}", prefix, k);
    block.weights.push_back(spec.add_variable({w[k], 0.0, 1.0, 0.0, false}));
  }
  for (int k = 0; k < s; ++k) {
    y[k] = fmt::format("{}.y{}", prefix, k);
    block.selectors.push_back(spec.add_variable({y[k], 0.0, 1.0, 0.0, true}));
  }
  lp::LpRow sum_w{prefix + ".sum_w", Sense::kEqual, {}, 1.0, {}};
  for (const auto& v : w) sum_w.terms.push_back({v, 1.0});
  spec.add_row(std::move(sum_w));
  lp::LpRow sum_y{prefix + ".sum_y", Sense::kEqual, {}, 1.0, {}};
  for (const auto& v : y) sum_y.terms.push_back({v, 1.0});
  spec.add_row(std::move(sum_y));
  // Weight k touches segments k-1 and k.
  for (int k = 0; k <= s; ++k) {
    lp::LpRow adj{fmt::format("{}.adj{}", prefix, k), Sense::kLessEqual, {{w[k], 1.0}}, 0.0, {}};
    if (k > 0) adj.terms.push_back({y[k - 1], -1.0});
    if (k < s) adj.terms.push_back({y[k], -1.0});
    spec.add_row(std::move(adj));
  }
  lp::LpRow out_row{prefix + ".out", Sense::kEqual, {{out_var, 1.0}}, 0.0, {}};
  lp::LpRow in_row{prefix + ".in", Sense::kEqual, {{in_var, 1.0}}, 0.0, {}};
  for (int k = 1; k <= s; ++k) {
    out_row.terms.push_back({w[k], -curve.output[k]});
    in_row.terms.push_back({w[k], -curve.input[k]});
  }
  spec.add_row(std::move(out_row));
  spec.add_row(std::move(in_row));
  return block;
}

}  // namespace mesval::hub
