#include "mesval/harness/reports.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::harness {

namespace {

constexpr const char* kModule = "cli_harness";
constexpr const char* kSectorNames[] = {"electricity", "heat", "cooling"};

std::string date_of(HourStamp h) { return format_timestamp(h).substr(0, 10); }

}  // namespace

double MonthlyCosts::conservation_error() const {
  double sum = 0.0;
  for (double x : kcny) sum += x;
  return std::abs(sum - total_kcny);
}

MonthlyCosts monthly_costs(const valuation::Evaluation& ev) {
  MonthlyCosts m;
  for (const auto& d : ev.days) {
    const std::string month = date_of(d.start).substr(0, 7);
    if (m.month.empty() || m.month.back() != month) {
      m.month.push_back(month);
      m.days.push_back(0);
      m.kcny.push_back(0.0);
    }
    ++m.days.back();
    m.kcny.back() += d.cost / valuation::kCurrencyPerKcny;
  }
  m.total_kcny = ev.total / valuation::kCurrencyPerKcny;
  return m;
}

std::string daily_costs_csv(const valuation::Evaluation& ev) {
  std::string out = "date,cost_kcny,bnb_nodes\n";
  for (const auto& d : ev.days)
    out += fmt::format("{},{},{}\n", date_of(d.start), d.cost / valuation::kCurrencyPerKcny, d.nodes);
  return out;
}

std::string monthly_costs_csv(const std::vector<std::string>& labels, const std::vector<MonthlyCosts>& tables) {
  std::string out = "month,days";
  for (const auto& l : labels) out += ",cost_kcny_" + l;
  out += '\n';
  if (tables.empty()) return out;
  for (std::size_t i = 0; i < tables[0].month.size(); ++i) {
    out += fmt::format("{},{}", tables[0].month[i], tables[0].days[i]);
    for (const auto& t : tables) out += fmt::format(",{}", t.kcny.at(i));
    out += '\n';
  }
  out += fmt::format("total,{}", [&] {
    int n = 0;
    for (int d : tables[0].days) n += d;
    return n;
  }());
  for (const auto& t : tables) out += fmt::format(",{}", t.total_kcny);
  out += '\n';
  return out;
}

std::string monthly_costs_text(const std::string& title, const std::vector<std::string>& labels,
                               const std::vector<MonthlyCosts>& tables) {
  std::string out = title + "\n";
  out += fmt::format("{:<8} {:>5}", "month", "days");
  for (const auto& l : labels) out += fmt::format(" {:>16}", "C_" + l + " (kCNY)");
  out += '\n';
  if (tables.empty()) return out;
  int days = 0;
  for (std::size_t i = 0; i < tables[0].month.size(); ++i) {
    out += fmt::format("{:<8} {:>5}", tables[0].month[i], tables[0].days[i]);
    days += tables[0].days[i];
    for (const auto& t : tables) out += fmt::format(" {:>16.4f}", t.kcny.at(i));
    out += '\n';
  }
  out += fmt::format("{:<8} {:>5}", "total", days);
  for (const auto& t : tables) out += fmt::format(" {:>16.4f}", t.total_kcny);
  out += '\n';
  return out;
}

std::string epoch_costs_csv(const valuation::TrainLog& log) {
  std::string out = "epoch,train_cost_kcny\n";
  for (std::size_t e = 0; e < log.epoch_cost.size(); ++e)
    out += fmt::format("{},{}\n", e + 1, log.epoch_cost[e] / valuation::kCurrencyPerKcny);
  return out;
}

std::string ledger_csv(const valuation::CoalitionLedger& ledger) {
  std::string out = "coalition,cost_kcny,value_kcny\n";
  // Grand coalition first, empty last, as in the case-study table.
  for (valuation::Coalition u = ledger.grand() + 1; u-- > 0;)
    out += fmt::format("{},{},{}\n", valuation::coalition_label(u, ledger.sectors()), ledger.cost(u),
                       ledger.value(u));
  return out;
}

std::string allocation_csv(const valuation::CoalitionLedger& ledger, const valuation::Allocation& a) {
  std::string out = "sector,zero_shapley_kcny,payout_kcny\n";
  for (std::size_t n = 0; n < a.raw.size(); ++n)
    out += fmt::format("{},{},{}\n", ledger.sectors()[n], a.raw[n], a.payout[n]);
  return out;
}

std::string valuation_text(const valuation::ValuationReport& r) {
  const auto& l = r.ledger;
  std::string out = "Coalition costs and values on the test days (kCNY)\n";
  out += fmt::format("{:<10}", "");
  for (valuation::Coalition u = l.grand() + 1; u-- > 0;)
    out += fmt::format(" {:>12}", valuation::coalition_label(u, l.sectors()));
  out += fmt::format("\n{:<10}", "C_U");
  for (valuation::Coalition u = l.grand() + 1; u-- > 0;) out += fmt::format(" {:>12.4f}", l.cost(u));
  out += fmt::format("\n{:<10}", "V(U)");
  for (valuation::Coalition u = l.grand() + 1; u-- > 0;) out += fmt::format(" {:>12.4f}", l.value(u));
  out += "\n\nAllocation of V(N)\n";
  out += fmt::format("{:<10} {:>14} {:>14}\n", "sector", "zero-Shapley", "payout");
  double paid = 0.0;
  for (std::size_t n = 0; n < r.allocation.raw.size(); ++n) {
    out += fmt::format("{:<10} {:>14.4f} {:>14.4f}\n", l.sectors()[n], r.allocation.raw[n], r.allocation.payout[n]);
    paid += r.allocation.payout[n];
  }
  out += fmt::format("{:<10} {:>14} {:>14.4f}\n", "sum", "", paid);
  out += fmt::format("V(N) = {:.4f} kCNY, perfect-forecast cost {:.4f} kCNY\n", l.value(l.grand()),
                     r.ideal.total / valuation::kCurrencyPerKcny);
  return out;
}

std::string metrics_csv(const SectorMetrics& benchmark, const SectorMetrics& trained) {
  std::string out = "sector,model,mae_kw,rmse_kw,mape_pct\n";
  for (int s = 0; s < hub::kSectors; ++s) {
    out += fmt::format("{},benchmark,{},{},{}\n", kSectorNames[s], benchmark[s].mae, benchmark[s].rmse,
                       benchmark[s].mape);
    out += fmt::format("{},end_to_end,{},{},{}\n", kSectorNames[s], trained[s].mae, trained[s].rmse,
                       trained[s].mape);
  }
  return out;
}

std::string metrics_text(const std::string& trained_label, const SectorMetrics& benchmark,
                         const SectorMetrics& trained) {
  std::string out = fmt::format("Forecast accuracy on the test days (end-to-end coalition {})\n", trained_label);
  out += fmt::format("{:<12} {:<11} {:>10} {:>10} {:>9}\n", "sector", "model", "MAE kW", "RMSE kW", "MAPE %");
  for (int s = 0; s < hub::kSectors; ++s) {
    out += fmt::format("{:<12} {:<11} {:>10.2f} {:>10.2f} {:>9.2f}\n", kSectorNames[s], "benchmark",
                       benchmark[s].mae, benchmark[s].rmse, benchmark[s].mape);
    out += fmt::format("{:<12} {:<11} {:>10.2f} {:>10.2f} {:>9.2f}\n", "", "end-to-end", trained[s].mae,
                       trained[s].rmse, trained[s].mape);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw DataError(kModule, "cannot write " + path);
}

}  // namespace mesval::harness
