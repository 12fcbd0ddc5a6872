#pragma once

#include <array>
#include <string>
#include <vector>

#include "mesval/valuation/pipeline.hpp"

namespace mesval::harness {

/// Costs per calendar month (kCNY) and their total.
struct MonthlyCosts {
  std::vector<std::string> month;  // YYYY-MM
  std::vector<int> days;
  std::vector<double> kcny;
  double total_kcny = 0.0;  // straight from the evaluation total

  /// |sum of months - total|, kCNY.
  double conservation_error() const;
};

MonthlyCosts monthly_costs(const valuation::Evaluation& ev);

// CSV numbers use the shortest round-trip decimal form, so identical runs
// give identical bytes.
std::string daily_costs_csv(const valuation::Evaluation& ev);
/// One cost column per labelled table; all tables must cover the same days.
std::string monthly_costs_csv(const std::vector<std::string>& labels, const std::vector<MonthlyCosts>& tables);
std::string monthly_costs_text(const std::string& title, const std::vector<std::string>& labels,
                               const std::vector<MonthlyCosts>& tables);
std::string epoch_costs_csv(const valuation::TrainLog& log);

std::string ledger_csv(const valuation::CoalitionLedger& ledger);
std::string allocation_csv(const valuation::CoalitionLedger& ledger, const valuation::Allocation& a);
std::string valuation_text(const valuation::ValuationReport& r);

using SectorMetrics = std::array<forecast::ForecastMetrics, hub::kSectors>;
std::string metrics_csv(const SectorMetrics& benchmark, const SectorMetrics& trained);
std::string metrics_text(const std::string& trained_label, const SectorMetrics& benchmark,
                         const SectorMetrics& trained);

/// Writes `text` to `path`, creating parent directories. Throws DataError.
void write_text(const std::string& path, const std::string& text);

}  // namespace mesval::harness
