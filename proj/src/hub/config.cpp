#include "mesval/hub/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mesval/common/error.hpp"

namespace mesval::hub {

namespace {

constexpr const char* kModule = "energy_hub";
using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw InvalidInput(kModule, what); }

Carrier parse_carrier(const std::string& s) {
  if (s == "electricity") return Carrier::kElectricity;
  if (s == "heat") return Carrier::kHeat;
  if (s == "cooling") return Carrier::kCooling;
  if (s == "gas") return Carrier::kGas;
  fail("unknown carrier '" + s + "'");
}

ConverterKind parse_kind(const std::string& s) {
  if (s == "chp") return ConverterKind::kChp;
  if (s == "gas_boiler") return ConverterKind::kGasBoiler;
  if (s == "electric_boiler") return ConverterKind::kElectricBoiler;
  if (s == "electric_refrigerator") return ConverterKind::kElectricRefrigerator;
  fail("unknown converter kind '" + s + "'");
}

NodeKind parse_node_kind(const std::string& s) {
  if (s == "input") return NodeKind::kInput;
  if (s == "bus") return NodeKind::kBus;
  if (s == "converter") return NodeKind::kConverter;
  if (s == "output") return NodeKind::kOutput;
  fail("unknown node type '" + s + "'");
}

std::string node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::kInput: return "input";
    case NodeKind::kBus: return "bus";
    case NodeKind::kConverter: return "converter";
    case NodeKind::kOutput: return "output";
  }
  return "?";
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(fmt::format("{}: missing key '{}'", where, key));
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) fail(fmt::format("{}: '{}' must be a number", where, key));
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(fmt::format("{}: '{}' is not finite", where, key));
  return d;
}

HourlyArray hourly(const json& v, const std::string& where) {
  HourlyArray out{};
  if (v.is_number()) {
    out.fill(v.get<double>());
    return out;
  }
  if (!v.is_array() || v.size() != static_cast<std::size_t>(kHours))
    fail(fmt::format("{}: expected a number or an array of {} numbers", where, kHours));
  for (int t = 0; t < kHours; ++t) {
    if (!v[t].is_number()) fail(fmt::format("{}: entry {} is not a number", where, t));
    out[t] = v[t].get<double>();
  }
  return out;
}

}  // namespace

std::string to_string(Carrier c) {
  switch (c) {
    case Carrier::kElectricity: return "electricity";
    case Carrier::kHeat: return "heat";
    case Carrier::kCooling: return "cooling";
    case Carrier::kGas: return "gas";
  }
  return "?";
}

std::string to_string(ConverterKind k) {
  switch (k) {
    case ConverterKind::kChp: return "chp";
    case ConverterKind::kGasBoiler: return "gas_boiler";
    case ConverterKind::kElectricBoiler: return "electric_boiler";
    case ConverterKind::kElectricRefrigerator: return "electric_refrigerator";
  }
  return "?";
}

int sector_of(Carrier c) {
  switch (c) {
    case Carrier::kElectricity: return 0;
    case Carrier::kHeat: return 1;
    case Carrier::kCooling: return 2;
    case Carrier::kGas: return -1;
  }
  return -1;
}

Carrier ConverterSpec::input_carrier() const {
  switch (kind) {
    case ConverterKind::kChp:
    case ConverterKind::kGasBoiler: return Carrier::kGas;
    case ConverterKind::kElectricBoiler:
    case ConverterKind::kElectricRefrigerator: return Carrier::kElectricity;
  }
  return Carrier::kGas;
}

Carrier ConverterSpec::primary_output() const {
  switch (kind) {
    case ConverterKind::kChp: return Carrier::kElectricity;
    case ConverterKind::kGasBoiler:
    case ConverterKind::kElectricBoiler: return Carrier::kHeat;
    case ConverterKind::kElectricRefrigerator: return Carrier::kCooling;
  }
  return Carrier::kHeat;
}

std::vector<Carrier> ConverterSpec::output_carriers() const {
  if (kind != ConverterKind::kChp) return {primary_output()};
  std::vector<Carrier> out{Carrier::kElectricity, Carrier::kHeat};
  if (absorption_cop > 0.0) out.push_back(Carrier::kCooling);
  return out;
}

int HubConfig::find_node(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> HubConfig::nodes_of(NodeKind kind) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == kind) out.push_back(static_cast<int>(i));
  return out;
}

std::array<int, kSectors> HubConfig::output_nodes() const {
  std::array<int, kSectors> out{-1, -1, -1};
  for (int i : nodes_of(NodeKind::kOutput)) {
    const int s = sector_of(nodes[i].carrier);
    if (s >= 0) out[s] = i;
  }
  return out;
}

void HubConfig::validate() const {
  if (schema_version != kSchemaVersion)
    fail(fmt::format("unsupported schema_version {} (expected {})", schema_version, kSchemaVersion));
  std::set<std::string> names;
  for (const auto& n : nodes) {
    if (n.name.empty()) fail("node with empty name");
    if (!names.insert(n.name).second) fail("duplicate node name '" + n.name + "'");
  }
  const int nn = static_cast<int>(nodes.size());

  std::vector<int> in_deg(nn, 0), out_deg(nn, 0);
  std::set<std::string> branch_names;
  for (const auto& b : branches) {
    if (!branch_names.insert(b.name).second) fail("duplicate branch name '" + b.name + "'");
    if (b.from < 0 || b.from >= nn || b.to < 0 || b.to >= nn) fail("branch '" + b.name + "' has a bad endpoint");
    if (b.from == b.to) fail("branch '" + b.name + "' is a self loop");
    ++out_deg[b.from];
    ++in_deg[b.to];
  }

  std::array<int, kSectors> outputs_per_sector{0, 0, 0};
  for (int i = 0; i < nn; ++i) {
    const Node& n = nodes[i];
    if (in_deg[i] + out_deg[i] == 0) fail("disconnected node '" + n.name + "'");
    switch (n.kind) {
      case NodeKind::kInput: {
        if (in_deg[i] > 0) fail("input node '" + n.name + "' cannot receive flow");
        const auto& in = n.input;
        if (!(in.capacity >= 0.0)) fail("input '" + n.name + "' capacity must be >= 0");
        if (in.reserve_up < 0.0 || in.reserve_down < 0.0) fail("input '" + n.name + "' reserves must be >= 0");
        for (int t = 0; t < kHours; ++t) {
          if (in.price_day_ahead[t] < 0.0 || in.price_intra_day[t] < 0.0)
            fail(fmt::format("input '{}' has a negative price at hour {}", n.name, t));
          if (assert_price_order && in.price_intra_day[t] < in.price_day_ahead[t])
            fail(fmt::format("input '{}': intra-day price below day-ahead price at hour {}", n.name, t));
        }
        break;
      }
      case NodeKind::kOutput: {
        if (out_deg[i] > 0) fail("output node '" + n.name + "' cannot send flow");
        const int s = sector_of(n.carrier);
        if (s < 0) fail("output node '" + n.name + "' must carry electricity, heat or cooling");
        ++outputs_per_sector[s];
        break;
      }
      case NodeKind::kBus:
        if (in_deg[i] == 0 || out_deg[i] == 0) fail("bus '" + n.name + "' needs inflow and outflow");
        break;
      case NodeKind::kConverter: {
        const auto& c = n.converter;
        if (!(c.capacity > 0.0)) fail("converter '" + n.name + "' capacity must be > 0");
        if (c.reserve_up < 0.0 || c.reserve_down < 0.0) fail("converter '" + n.name + "' reserves must be >= 0");
        if (c.efficiency_curve.empty()) fail("converter '" + n.name + "' needs an efficiency curve");
        for (std::size_t k = 0; k < c.efficiency_curve.size(); ++k) {
          const auto& p = c.efficiency_curve[k];
          if (!(p.efficiency > 0.0 && p.efficiency <= 1.5) && c.kind != ConverterKind::kElectricRefrigerator)
            fail(fmt::format("converter '{}': efficiency {} outside (0, 1.5]", n.name, p.efficiency));
          if (!(p.efficiency > 0.0)) fail(fmt::format("converter '{}': efficiency must be > 0", n.name));
          if (p.load_fraction < 0.0 || p.load_fraction > 1.0)
            fail(fmt::format("converter '{}': load fraction {} outside [0, 1]", n.name, p.load_fraction));
          if (k > 0 && !(p.load_fraction > c.efficiency_curve[k - 1].load_fraction))
            fail("converter '" + n.name + "': breakpoints must be strictly increasing in load fraction");
        }
        if (c.piecewise() && c.segments < 1) fail("converter '" + n.name + "': segments must be >= 1");
        if (c.kind == ConverterKind::kChp && !(c.heat_to_power_ratio > 0.0))
          fail("chp '" + n.name + "' needs heat_to_power_ratio > 0");
        if (c.absorption_cop < 0.0) fail("converter '" + n.name + "': absorption_cop must be >= 0");

        // Exactly one branch per port, matched by carrier.
        std::map<Carrier, int> ins, outs;
        for (const auto& b : branches) {
          if (b.to == i) ++ins[b.carrier];
          if (b.from == i) ++outs[b.carrier];
        }
        if (ins.size() != 1 || ins.begin()->first != c.input_carrier() || ins.begin()->second != 1)
          fail(fmt::format("converter '{}': input port ({}) must have exactly one branch", n.name,
                           to_string(c.input_carrier())));
        const auto ports = c.output_carriers();
        for (Carrier port : ports)
          if (outs[port] != 1)
            fail(fmt::format("converter '{}': port without branch ({} output)", n.name, to_string(port)));
        for (const auto& [carrier, count] : outs)
          if (count > 0 && std::find(ports.begin(), ports.end(), carrier) == ports.end())
            fail(fmt::format("converter '{}' has no {} output port", n.name, to_string(carrier)));
        break;
      }
    }
  }
  int sectors = 0;
  for (int s = 0; s < kSectors; ++s) {
    if (outputs_per_sector[s] > 1)
      fail(fmt::format("at most one output node per sector, sector {} has {}", s, outputs_per_sector[s]));
    sectors += outputs_per_sector[s];
  }
  if (sectors == 0) fail("hub has no output node");

  // Branch carriers must match the non-converter endpoints.
  for (const auto& b : branches) {
    for (int end : {b.from, b.to}) {
      const Node& n = nodes[end];
      if (n.kind != NodeKind::kConverter && n.carrier != b.carrier)
        fail(fmt::format("branch '{}' carries {} but node '{}' carries {}", b.name, to_string(b.carrier), n.name,
                         to_string(n.carrier)));
    }
  }

  std::set<std::string> storage_names;
  for (const auto& s : storages) {
    if (!storage_names.insert(s.name).second) fail("duplicate storage name '" + s.name + "'");
    if (s.node < 0 || s.node >= nn || nodes[s.node].kind != NodeKind::kOutput)
      fail("storage '" + s.name + "' must sit at an output node");
    if (nodes[s.node].carrier != s.carrier) fail("storage '" + s.name + "' carrier does not match its node");
    if (!(s.capacity >= 0.0) || !(s.max_power >= 0.0)) fail("storage '" + s.name + "' needs capacity, power >= 0");
    if (s.initial_soc < 0.0 || s.initial_soc > s.capacity)
      fail("storage '" + s.name + "': initial SoC outside [0, capacity]");
    if (s.cost_charge < 0.0 || s.cost_discharge < 0.0) fail("storage '" + s.name + "': costs must be >= 0");
  }
}

HubConfig parse_hub_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("config must be a JSON object");

  HubConfig cfg;
  const json& version = require(doc, "schema_version", "config");
  if (!version.is_number_integer()) fail("schema_version must be an integer");
  cfg.schema_version = version.get<int>();
  if (cfg.schema_version != kSchemaVersion)
    fail(fmt::format("unsupported schema_version {} (expected {})", cfg.schema_version, kSchemaVersion));
  cfg.terminal_soc_at_least_initial = doc.value("terminal_soc_at_least_initial", true);
  cfg.assert_price_order = doc.value("assert_intra_day_price_order", true);
  const int default_segments = doc.value("segments", 0);

  try {
    for (const json& jn : require(doc, "nodes", "config")) {
      Node n;
      n.name = require(jn, "name", "node").get<std::string>();
      const std::string where = "node '" + n.name + "'";
      n.kind = parse_node_kind(require(jn, "type", where).get<std::string>());
      if (n.kind != NodeKind::kConverter) n.carrier = parse_carrier(require(jn, "carrier", where).get<std::string>());
      if (n.kind == NodeKind::kInput) {
        auto& in = n.input;
        in.capacity = number(jn, "capacity", where);
        in.reserve_up = number(jn, "reserve_up", where);
        in.reserve_down = number(jn, "reserve_down", where);
        in.price_day_ahead = hourly(require(jn, "price_day_ahead", where), where + " price_day_ahead");
        if (jn.contains("price_intra_day")) {
          in.price_intra_day = hourly(jn.at("price_intra_day"), where + " price_intra_day");
        } else {
          const double mult = number(jn, "intra_day_multiplier", where);
          for (int t = 0; t < kHours; ++t) in.price_intra_day[t] = mult * in.price_day_ahead[t];
        }
      } else if (n.kind == NodeKind::kOutput) {
        n.output.allow_surplus = jn.value("allow_surplus", false);
      } else if (n.kind == NodeKind::kConverter) {
        auto& c = n.converter;
        c.kind = parse_kind(require(jn, "kind", where).get<std::string>());
        n.carrier = c.primary_output();
        c.capacity = number(jn, "capacity", where);
        c.reserve_up = number(jn, "reserve_up", where);
        c.reserve_down = number(jn, "reserve_down", where);
        if (jn.contains("efficiency")) {
          c.efficiency_curve = {{1.0, number(jn, "efficiency", where)}};
        } else {
          for (const json& p : require(jn, "efficiency_curve", where)) {
            if (!p.is_array() || p.size() != 2) fail(where + ": curve points are [load_fraction, efficiency]");
            c.efficiency_curve.push_back({p[0].get<double>(), p[1].get<double>()});
          }
          c.segments = jn.value("segments", default_segments);
        }
        if (c.kind == ConverterKind::kChp) c.heat_to_power_ratio = number(jn, "heat_to_power_ratio", where);
        c.absorption_cop = jn.value("absorption_cop", 0.0);
      }
      cfg.nodes.push_back(std::move(n));
    }

    for (const json& jb : require(doc, "branches", "config")) {
      Branch b;
      const std::string from = require(jb, "from", "branch").get<std::string>();
      const std::string to = require(jb, "to", "branch").get<std::string>();
      b.name = jb.value("name", from + "->" + to);
      b.from = cfg.find_node(from);
      b.to = cfg.find_node(to);
      if (b.from < 0) fail("branch '" + b.name + "' references unknown node '" + from + "'");
      if (b.to < 0) fail("branch '" + b.name + "' references unknown node '" + to + "'");
      const Node& src = cfg.nodes[b.from];
      const Node& dst = cfg.nodes[b.to];
      if (src.kind != NodeKind::kConverter)
        b.carrier = src.carrier;
      else if (dst.kind != NodeKind::kConverter)
        b.carrier = dst.carrier;
      else
        b.carrier = dst.converter.input_carrier();
      cfg.branches.push_back(std::move(b));
    }

    if (doc.contains("storages")) {
      for (const json& js : doc.at("storages")) {
        StorageSpec s;
        s.name = require(js, "name", "storage").get<std::string>();
        const std::string where = "storage '" + s.name + "'";
        const std::string node = require(js, "node", where).get<std::string>();
        s.node = cfg.find_node(node);
        if (s.node < 0) fail(where + " references unknown node '" + node + "'");
        s.carrier = cfg.nodes[s.node].carrier;
        s.capacity = number(js, "capacity", where);
        s.max_power = number(js, "max_power", where);
        s.cost_charge = number(js, "cost_charge", where);
        s.cost_discharge = number(js, "cost_discharge", where);
        s.initial_soc = number(js, "initial_soc", where);
        s.binary = js.value("binary", true);
        cfg.storages.push_back(std::move(s));
      }
    }
  } catch (const json::exception& e) {
    fail(std::string("config has a wrong value type: ") + e.what());
  }

  cfg.validate();
  return cfg;
}

HubConfig load_hub_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open hub config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_hub_config(ss.str());
}

std::string hub_config_to_json(const HubConfig& cfg) {
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["terminal_soc_at_least_initial"] = cfg.terminal_soc_at_least_initial;
  doc["assert_intra_day_price_order"] = cfg.assert_price_order;
  json nodes = json::array();
  for (const auto& n : cfg.nodes) {
    json jn;
    jn["name"] = n.name;
    jn["type"] = node_kind_name(n.kind);
    if (n.kind == NodeKind::kInput) {
      jn["carrier"] = to_string(n.carrier);
      jn["capacity"] = n.input.capacity;
      jn["reserve_up"] = n.input.reserve_up;
      jn["reserve_down"] = n.input.reserve_down;
      jn["price_day_ahead"] = n.input.price_day_ahead;
      jn["price_intra_day"] = n.input.price_intra_day;
    } else if (n.kind == NodeKind::kConverter) {
      const auto& c = n.converter;
      jn["kind"] = to_string(c.kind);
      jn["capacity"] = c.capacity;
      jn["reserve_up"] = c.reserve_up;
      jn["reserve_down"] = c.reserve_down;
      json curve = json::array();
      for (const auto& p : c.efficiency_curve) curve.push_back({p.load_fraction, p.efficiency});
      jn["efficiency_curve"] = curve;
      jn["segments"] = c.segments;
      if (c.kind == ConverterKind::kChp) jn["heat_to_power_ratio"] = c.heat_to_power_ratio;
      if (c.absorption_cop > 0.0) jn["absorption_cop"] = c.absorption_cop;
    } else {
      jn["carrier"] = to_string(n.carrier);
      if (n.kind == NodeKind::kOutput) jn["allow_surplus"] = n.output.allow_surplus;
    }
    nodes.push_back(jn);
  }
  doc["nodes"] = nodes;
  json branches = json::array();
  for (const auto& b : cfg.branches)
    branches.push_back({{"name", b.name}, {"from", cfg.nodes[b.from].name}, {"to", cfg.nodes[b.to].name}});
  doc["branches"] = branches;
  json storages = json::array();
  for (const auto& s : cfg.storages)
    storages.push_back({{"name", s.name},
                        {"node", cfg.nodes[s.node].name},
                        {"capacity", s.capacity},
                        {"max_power", s.max_power},
                        {"cost_charge", s.cost_charge},
                        {"cost_discharge", s.cost_discharge},
                        {"initial_soc", s.initial_soc},
                        {"binary", s.binary}});
  doc["storages"] = storages;
  return doc.dump(2);
}

}  // namespace mesval::hub
