#include "mesval/valuation/shapley.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::valuation {

namespace {

constexpr const char* kModule = "valuation";

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::string coalition_label(Coalition u, const std::vector<std::string>& sectors) {
  std::string out;
  for (std::size_t n = 0; n < sectors.size(); ++n)
    if (u & (1u << n)) out += sectors[n];
  return out.empty() ? "-" : out;
}

Coalition parse_coalition(const std::string& text, const std::vector<std::string>& sectors) {
  if (text.empty() || text == "-" || text == "none") return 0;
  Coalition u = 0;
  std::size_t at = 0;
  while (at < text.size()) {
    bool hit = false;
    for (std::size_t n = 0; n < sectors.size(); ++n) {
      const auto& s = sectors[n];
      if (text.compare(at, s.size(), s) == 0) {
        u |= 1u << n;
        at += s.size();
        hit = true;
        break;
      }
    }
    if (!hit) throw InvalidInput(kModule, fmt::format("unknown sector in coalition '{}' at position {}", text, at));
  }
  return u;
}

CoalitionLedger::CoalitionLedger(std::vector<std::string> sectors) : sectors_(std::move(sectors)) {
  if (sectors_.empty() || static_cast<int>(sectors_.size()) > kMaxPlayers)
    throw InvalidInput(kModule, fmt::format("ledger needs 1..{} sectors", kMaxPlayers));
  cost_.assign(std::size_t{1} << sectors_.size(), std::nullopt);
}

void CoalitionLedger::set_cost(Coalition u, double cost) {
  if (u > grand()) throw InvalidInput(kModule, fmt::format("coalition {} outside the ledger", u));
  cost_[u] = cost;
}

bool CoalitionLedger::has_cost(Coalition u) const { return u <= grand() && cost_[u].has_value(); }

double CoalitionLedger::cost(Coalition u) const {
  if (!has_cost(u))
    throw InvalidInput(kModule, "missing cost for coalition " + coalition_label(u, sectors_));
  return *cost_[u];
}

double CoalitionLedger::value(Coalition u) const { return cost(0) - cost(u); }

bool CoalitionLedger::complete() const {
  for (const auto& c : cost_)
    if (!c) return false;
  return true;
}

std::vector<double> CoalitionLedger::values() const {
  std::vector<double> v(cost_.size());
  for (Coalition u = 0; u < cost_.size(); ++u) v[u] = value(u);
  return v;
}

std::vector<double> zero_shapley(const std::vector<double>& values, int n) {
  if (n < 1 || n > kMaxPlayers) throw InvalidInput(kModule, fmt::format("zero_shapley: {} players", n));
  if (values.size() != (std::size_t{1} << n))
    throw InvalidInput(kModule, fmt::format("zero_shapley: {} values for {} players", values.size(), n));
  if (values[0] != 0.0) throw InvalidInput(kModule, "zero_shapley: V(empty) must be 0");
  std::vector<double> weight(n);
  for (int k = 0; k < n; ++k) weight[k] = 1.0 / (n * binomial(n - 1, k));
  std::vector<double> v(n, 0.0);
  for (int p = 0; p < n; ++p) {
    const Coalition bit = 1u << p;
    for (Coalition s = 0; s < values.size(); ++s) {
      if (s & bit) continue;
      const double gain = values[s | bit] - values[s];
      if (gain > 0.0) v[p] += weight[std::popcount(s)] * gain;
    }
  }
  return v;
}

Allocation normalize_allocation(const std::vector<double>& raw, double grand_value) {
  Allocation a;
  a.raw = raw;
  a.payout.assign(raw.size(), 0.0);
  double sum = 0.0;
  for (double r : raw) {
    if (r < 0.0 || !std::isfinite(r))
      throw InvariantViolation(kModule, fmt::format("zero-Shapley value {} is negative or not finite", r));
    sum += r;
  }
  if (sum == 0.0) return a;
  for (std::size_t i = 0; i < raw.size(); ++i) a.payout[i] = raw[i] / sum * grand_value;
  return a;
}

}  // namespace mesval::valuation
