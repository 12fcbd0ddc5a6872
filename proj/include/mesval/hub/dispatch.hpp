#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "mesval/hub/config.hpp"
#include "mesval/hub/matrices.hpp"
#include "mesval/milp/branch_and_bound.hpp"

namespace mesval::hub {

/// Loads and forecasts are flat vectors of kForecastSlots entries,
/// sector-major: slot(s, t) = s * 24 + t.
inline int slot(int sector, int hour) { return sector * kHours + hour; }

enum class Stage { kDayAhead, kIntraDay, kJoint };
std::string to_string(Stage s);

using HourIndex = std::array<int, kHours>;

/// Variable indices of one stage's network. -1 marks an absent variable.
struct StageIndex {
  std::vector<HourIndex> flow;     // per branch
  std::vector<HourIndex> input;    // per X column
  std::vector<HourIndex> output;   // per sector
  std::vector<HourIndex> surplus;  // per sector
  std::vector<std::vector<HourIndex>> weights;    // per converter, per breakpoint (empty if fixed efficiency)
  std::vector<std::vector<HourIndex>> selectors;  // per converter, per segment
  // Day-ahead: planned charge/discharge and planned SoC.
  // Intra-day: charge/discharge adjustments and realized SoC.
  std::vector<HourIndex> charge, discharge, soc, mode;  // per storage
};

struct DispatchProblem {
  Stage stage = Stage::kJoint;
  std::shared_ptr<const HubConfig> config;
  HubMatrices matrices;
  milp::MILPProblem milp;
  std::vector<std::string> var_names;

  StageIndex day_ahead;  // pinned constants in a standalone intra-day problem
  StageIndex intra_day;  // empty for a day-ahead problem
  std::vector<HourIndex> up, down;  // per input: intra-day purchase above / below plan
  std::vector<HourIndex> deviation; // per converter: primary output re-dispatch
  int day_ahead_vars = 0;           // the day-ahead block is the first variables

  // The 72 parameter slots are forecasts for day-ahead and joint problems
  // and actual loads for a standalone intra-day problem.
  bool params_are_forecasts = true;
  Vector actual;  // joint: actual loads entering the intra-day balance as constants

  std::vector<HourIndex> day_ahead_balance_rows;  // per sector, equality-row index
  std::vector<HourIndex> intra_day_balance_rows;
};

/// Throws InvalidInput if `loads` has the wrong size or a negative/non-finite
/// entry.
void check_loads(const Vector& loads, const char* what);
/// Throws InvalidInput when a sector without an output node has load.
void check_served(const HubMatrices& m, const Vector& loads, const char* what);

DispatchProblem build_day_ahead(const HubConfig& config);
/// `plan` is the day-ahead part (first day_ahead_vars entries) of a solution
/// of build_day_ahead on the same config; it is pinned as constants.
DispatchProblem build_intra_day(const Vector& plan, const HubConfig& config);
DispatchProblem build_joint(const Vector& actual, const HubConfig& config);

/// Forecasts go in as the parameter vector; `build_day_ahead` itself has no
/// data. These helpers validate the load vector and run branch and bound.
milp::MILPResult solve_dispatch(const DispatchProblem& problem, const Vector& params,
                                const milp::BnbOptions& opts = {});

struct CostBreakdown {
  double day_ahead = 0.0;  // planned input purchases
  double intra_day = 0.0;  // purchases above plan at intra-day prices
  double storage = 0.0;    // charge/discharge costs of both stages
  double total() const { return day_ahead + intra_day + storage; }
};

CostBreakdown dispatch_cost(const DispatchProblem& problem, const Vector& z);

/// Sequential evaluation: day-ahead on the forecast, then intra-day on the
/// actual loads with the plan fixed.
struct SequentialResult {
  milp::MILPResult day_ahead;
  milp::MILPResult intra_day;
  double cost = 0.0;
};
SequentialResult solve_sequential(const HubConfig& config, const Vector& forecast, const Vector& actual,
                                  const milp::BnbOptions& opts = {});

struct InvariantReport {
  double conservation = 0.0;  // max |X'V - V_in|, |Y'V - V_out|, |ZV|, piecewise rows (kW)
  double balance = 0.0;       // max load-balance residual (kW)
  double reserve = 0.0;       // max excess of |intra-day - plan| over the reserve (kW)
  double soc_bounds = 0.0;    // max SoC excursion outside [0, capacity]
  double soc_recursion = 0.0;
  double exclusivity = 0.0;   // max charge * discharge product within a stage
  double integrality = 0.0;

  bool ok(double tol = 1e-7) const;
  std::string summary() const;
  /// Elementwise max.
  void merge(const InvariantReport& other);
};

InvariantReport check_dispatch(const DispatchProblem& problem, const Vector& z, const Vector& params);

}  // namespace mesval::hub
