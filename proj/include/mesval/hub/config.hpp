#pragma once

#include <array>
#include <string>
#include <vector>

namespace mesval::hub {

inline constexpr int kHours = 24;
inline constexpr int kSectors = 3;  // electricity, heat, cooling
inline constexpr int kForecastSlots = kSectors * kHours;

using HourlyArray = std::array<double, kHours>;

enum class Carrier { kElectricity, kHeat, kCooling, kGas };
enum class NodeKind { kInput, kBus, kConverter, kOutput };
enum class ConverterKind { kChp, kGasBoiler, kElectricBoiler, kElectricRefrigerator };

std::string to_string(Carrier c);
std::string to_string(ConverterKind k);

/// Sector index of a load carrier (electricity 0, heat 1, cooling 2), -1 for gas.
int sector_of(Carrier c);

struct EfficiencyPoint {
  double load_fraction = 1.0;
  double efficiency = 1.0;
};

struct ConverterSpec {
  ConverterKind kind = ConverterKind::kGasBoiler;
  double capacity = 0.0;  // kW of the primary output
  // One point means a fixed efficiency; more points are linearized with
  // `segments` pieces and segment-selection binaries.
  std::vector<EfficiencyPoint> efficiency_curve;
  int segments = 3;
  double heat_to_power_ratio = 0.0;  // CHP: heat = ratio * electricity
  double absorption_cop = 0.0;       // CHP: cooling per unit of recovered heat, 0 = no cooling port
  double reserve_up = 0.0;           // intra-day deviation of the primary output, kW
  double reserve_down = 0.0;

  Carrier input_carrier() const;
  Carrier primary_output() const;
  std::vector<Carrier> output_carriers() const;
  bool piecewise() const { return efficiency_curve.size() > 1; }
};

struct InputSpec {
  double capacity = 1e30;
  double reserve_up = 0.0;
  double reserve_down = 0.0;
  HourlyArray price_day_ahead{};  // CNY/kWh
  HourlyArray price_intra_day{};
};

struct OutputSpec {
  bool allow_surplus = false;  // zero-cost dump of surplus energy
};

struct Node {
  std::string name;
  NodeKind kind = NodeKind::kBus;
  Carrier carrier = Carrier::kElectricity;  // inputs, buses and outputs
  InputSpec input;
  ConverterSpec converter;
  OutputSpec output;
};

struct Branch {
  std::string name;
  int from = -1;
  int to = -1;
  Carrier carrier = Carrier::kElectricity;
};

struct StorageSpec {
  std::string name;
  int node = -1;  // output node the storage sits at
  Carrier carrier = Carrier::kElectricity;
  double capacity = 0.0;   // kWh
  double max_power = 0.0;  // kW, charge and discharge
  double cost_charge = 0.0;
  double cost_discharge = 0.0;
  double initial_soc = 0.0;
  bool binary = true;  // charge/discharge exclusion through a binary
};

struct HubConfig {
  int schema_version = 1;
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  std::vector<StorageSpec> storages;
  bool terminal_soc_at_least_initial = true;
  bool assert_price_order = true;

  int find_node(const std::string& name) const;
  /// Output node of each sector, in sector order; -1 for a sector the hub
  /// does not serve (its loads must be zero).
  std::array<int, kSectors> output_nodes() const;
  std::vector<int> nodes_of(NodeKind kind) const;

  /// Throws InvalidInput on any schema or topology error.
  void validate() const;
};

inline constexpr int kSchemaVersion = 1;

HubConfig parse_hub_config(const std::string& json_text);
HubConfig load_hub_config(const std::string& path);
std::string hub_config_to_json(const HubConfig& config);

}  // namespace mesval::hub
