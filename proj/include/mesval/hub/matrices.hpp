#pragma once

#include <string>
#include <vector>

#include "mesval/hub/config.hpp"
#include "mesval/lp/standard_form.hpp"

namespace mesval::hub {

using lp::Matrix;
using lp::Vector;

/// Per-hour flow equations of the hub: X' V = V_in, Y' V = V_out, Z V = 0,
/// with V the branch flows. Output columns are in sector order.
struct HubMatrices {
  Matrix X;  // branches x inputs
  Matrix Y;  // branches x outputs
  Matrix Z;  // conservation/conversion rows x branches
  std::vector<std::string> branch_labels;
  std::vector<std::string> input_labels;
  std::vector<std::string> output_labels;
  std::vector<std::string> z_labels;
  std::vector<int> input_nodes;                 // config node per X column
  std::array<int, kSectors> output_nodes{};     // config node per Y column
  std::vector<int> converter_nodes;             // config nodes of converters, config order
  std::vector<int> converter_in_branch;         // per converter
  std::vector<int> converter_primary_branch;    // per converter

  int branches() const { return static_cast<int>(branch_labels.size()); }
  int inputs() const { return static_cast<int>(input_labels.size()); }
};

/// Piecewise converters have no Z row; their input/output relation is a
/// separate piecewise block.
HubMatrices build_hub_matrices(const HubConfig& config);

/// Piecewise-linear input(output) relation. Breakpoint 0 is the off state
/// (output 0, input 0); the others sit at k/S of capacity.
struct PiecewiseCurve {
  std::vector<double> output;
  std::vector<double> input;

  int segments() const { return static_cast<int>(output.size()) - 1; }
  /// Linear interpolation between neighbouring breakpoints.
  double input_at(double out) const;
};

/// Efficiency at a load fraction: linear between breakpoints, flat outside.
double efficiency_at(const std::vector<EfficiencyPoint>& curve, double load_fraction);

/// Exact input needed for `out`: out / efficiency(out / capacity).
double exact_input(const std::vector<EfficiencyPoint>& curve, double capacity, double out);

/// Throws InvalidInput when segments < 1 or the curve has fewer than two
/// breakpoints.
PiecewiseCurve piecewise_linearize(const std::vector<EfficiencyPoint>& curve, double capacity, int segments);

struct PiecewiseBlock {
  std::vector<int> weights;    // one per breakpoint, in [0, 1]
  std::vector<int> selectors;  // one binary per segment
};

/// Emits weights w_k, selectors y_k and the rows
///   sum w = 1, sum y = 1, w_k <= y_{k-1} + y_k,
///   out = sum w_k P_k, in = sum w_k I_k
/// into `spec`. `in_var`/`out_var` name existing variables.
PiecewiseBlock emit_piecewise(lp::LpSpec& spec, const PiecewiseCurve& curve, const std::string& prefix,
                              const std::string& in_var, const std::string& out_var);

}  // namespace mesval::hub
