#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mesval::valuation {

/// Bit n set = sector n is in the coalition.
using Coalition = unsigned;

inline constexpr int kMaxPlayers = 20;

/// "ehc"-style label from per-sector labels; "-" for the empty coalition.
std::string coalition_label(Coalition u, const std::vector<std::string>& sectors);
/// Inverse of coalition_label; also accepts "" and "none" for the empty
/// coalition. Throws InvalidInput on an unknown sector letter.
Coalition parse_coalition(const std::string& text, const std::vector<std::string>& sectors);

/// Costs and values of every coalition, indexed by bitmask. Values are
/// savings against the forecast-then-optimize baseline: V(U) = C_0 - C_U.
class CoalitionLedger {
 public:
  explicit CoalitionLedger(std::vector<std::string> sectors);

  int players() const { return static_cast<int>(sectors_.size()); }
  Coalition grand() const { return (1u << players()) - 1u; }
  const std::vector<std::string>& sectors() const { return sectors_; }

  void set_cost(Coalition u, double cost);
  bool has_cost(Coalition u) const;
  /// Throws InvalidInput when the entry is missing.
  double cost(Coalition u) const;
  /// C_0 - C_U; throws InvalidInput when either cost is missing.
  double value(Coalition u) const;
  bool complete() const;
  /// All 2^n values; throws InvalidInput unless complete.
  std::vector<double> values() const;

 private:
  std::vector<std::string> sectors_;
  std::vector<std::optional<double>> cost_;
};

/// v_n = 1/|N| * sum over S in N\{n} of C(|N|-1, |S|)^-1 [V(S+n) - V(S)]^+,
/// by full subset enumeration. `values` has 2^n entries with V(empty) = 0.
/// Throws InvalidInput on a wrong size, V(empty) != 0 or n > kMaxPlayers.
std::vector<double> zero_shapley(const std::vector<double>& values, int n);

struct Allocation {
  std::vector<double> raw;     // zero-Shapley values
  std::vector<double> payout;  // raw_n / sum(raw) * (V(N) - V(empty))
};

/// Proportional budget-balancing split of `grand_value`. When sum(raw) is 0
/// every payout is 0. A negative raw value throws InvariantViolation.
Allocation normalize_allocation(const std::vector<double>& raw, double grand_value);

}  // namespace mesval::valuation
