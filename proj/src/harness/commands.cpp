#include "mesval/harness/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

#include <fmt/format.h>

#include "mesval/common/error.hpp"
#include "mesval/harness/reports.hpp"

namespace mesval::harness {

namespace {

using valuation::Coalition;
using valuation::kCurrencyPerKcny;

constexpr double kConservationTol = 1e-6;  // kCNY
constexpr double kBudgetTol = 1e-9;

std::string file_label(Coalition u, const std::vector<std::string>& sectors) {
  return u == 0 ? "none" : valuation::coalition_label(u, sectors);
}

void progress(const std::string& line) { std::cerr << line << std::endl; }

}  // namespace

Runner::Runner(ExperimentConfig cfg)
    : cfg_(std::move(cfg)),
      pipeline_(make_scenario(cfg_)),
      store_((std::filesystem::path(cfg_.output_dir) / "models").string(), fingerprint(cfg_)) {}

std::string Runner::path(const std::string& name) const {
  return (std::filesystem::path(cfg_.output_dir) / name).string();
}

void Runner::write(CommandResult& r, const std::string& name, const std::string& text) const {
  write_text(path(name), text);
  r.written.push_back(path(name));
}

Coalition Runner::parse_coalition(const std::string& text) const {
  return valuation::parse_coalition(text, pipeline_.sector_labels());
}

valuation::Models Runner::base(CommandResult& r) {
  if (auto m = store_.load("base")) {
    r.text += "base models loaded from " + path("models/base") + "\n";
    return *m;
  }
  progress("training base models");
  auto m = pipeline_.train_base();
  store_.save("base", m);
  r.text += "base models trained and saved to " + path("models/base") + "\n";
  return m;
}

CommandResult Runner::train_base() {
  CommandResult r;
  progress("training base models");
  const auto m = pipeline_.train_base();
  store_.save("base", m);
  r.text += "base models trained and saved to " + path("models/base") + "\n";
  const auto fit = valuation::forecast_metrics(pipeline_, m, pipeline_.scenario().train_days);
  std::string csv = "sector,mae_kw,rmse_kw,mape_pct\n";
  for (int s = 0; s < hub::kSectors; ++s) {
    csv += fmt::format("{},{},{},{}\n", kSectorColumns[s], fit[s].mae, fit[s].rmse, fit[s].mape);
    r.text += fmt::format("{:<15} train MAPE {:6.2f} %\n", kSectorColumns[s], fit[s].mape);
  }
  write(r, "base_fit.csv", csv);
  return r;
}

void Runner::write_fto(CommandResult& r, const valuation::Evaluation& fto) {
  const auto monthly = monthly_costs(fto);
  if (monthly.conservation_error() > kConservationTol)
    r.problems.push_back(fmt::format("monthly costs do not add up to the total ({:.3e} kCNY)",
                                     monthly.conservation_error()));
  write(r, "fto_daily.csv", daily_costs_csv(fto));
  write(r, "fto_monthly.csv", monthly_costs_csv({"fto"}, {monthly}));
  const std::string text = monthly_costs_text("Forecast-then-optimize operation cost on the test days", {"fto"},
                                              {monthly}) +
                           fmt::format("C_fto = {:.4f} kCNY over {} days\n", monthly.total_kcny, fto.days.size());
  write(r, "fto_report.txt", text);
  r.text += text;
}

void Runner::write_e2e(CommandResult& r, Coalition u, const valuation::Evaluation& fto,
                       const valuation::Evaluation& trained, const valuation::TrainLog& log) {
  const std::string label = file_label(u, pipeline_.sector_labels());
  const auto m0 = monthly_costs(fto);
  const auto mu = monthly_costs(trained);
  if (mu.conservation_error() > kConservationTol)
    r.problems.push_back(fmt::format("coalition {}: monthly costs do not add up to the total", label));
  write(r, "e2e_" + label + "_daily.csv", daily_costs_csv(trained));
  write(r, "e2e_" + label + "_monthly.csv", monthly_costs_csv({"fto", label}, {m0, mu}));
  write(r, "e2e_" + label + "_train.csv", epoch_costs_csv(log));
  const std::string text =
      monthly_costs_text("Operation cost on the test days, coalition " + label + " trained end to end",
                         {"fto", label}, {m0, mu}) +
      fmt::format("C_fto = {:.4f} kCNY, C_{} = {:.4f} kCNY, V({}) = {:.4f} kCNY\n", m0.total_kcny, label,
                  mu.total_kcny, label, m0.total_kcny - mu.total_kcny) +
      fmt::format("gradient fallbacks to the envelope: {} of {} training dispatches\n", log.degenerate,
                  log.dispatches);
  write(r, "e2e_" + label + "_report.txt", text);
  r.text += text;
}

CommandResult Runner::run_fto() {
  CommandResult r;
  const auto m = base(r);
  const auto fto = pipeline_.evaluate(m, pipeline_.scenario().test_days);
  r.invariants.merge(fto.invariants);
  write_fto(r, fto);
  return r;
}

CommandResult Runner::train_e2e(Coalition u) {
  CommandResult r;
  const auto m = base(r);
  const auto label = file_label(u, pipeline_.sector_labels());
  progress("end-to-end training, coalition " + label);
  valuation::TrainLog log;
  const auto trained = pipeline_.train_end_to_end(u, m, &log);
  store_.save(label, trained);
  const auto& test = pipeline_.scenario().test_days;
  const auto fto = pipeline_.evaluate(m, test);
  const auto ev = pipeline_.evaluate(trained, test);
  r.invariants.merge(log.invariants);
  r.invariants.merge(fto.invariants);
  r.invariants.merge(ev.invariants);
  write_e2e(r, u, fto, ev, log);
  return r;
}

CommandResult Runner::valuate() {
  CommandResult r;
  const auto m = base(r);
  progress("valuation: end-to-end training for every coalition");
  const auto rep = valuation::full_valuation(pipeline_, m);
  const auto sectors = pipeline_.sector_labels();
  const Coalition count = 1u << hub::kSectors;
  write_fto(r, rep.test_evaluations[0]);
  for (Coalition u = 0; u < count; ++u) {
    r.invariants.merge(rep.test_evaluations[u].invariants);
    r.invariants.merge(rep.train_logs[u].invariants);
    if (u == 0) continue;
    store_.save(file_label(u, sectors), rep.coalition_models[u]);
    write_e2e(r, u, rep.test_evaluations[0], rep.test_evaluations[u], rep.train_logs[u]);
  }
  r.invariants.merge(rep.ideal.invariants);
  for (Coalition u = 0; u < count; ++u)
    for (std::size_t i = 0; i < rep.ideal.days.size(); ++i)
      if (rep.ideal.days[i].cost > rep.test_evaluations[u].days[i].cost + 1e-9)
        r.problems.push_back(fmt::format("perfect-forecast cost exceeds coalition {} on day {}",
                                         file_label(u, sectors), rep.ideal.days[i].day));
  double paid = 0.0, raw = 0.0;
  for (std::size_t n = 0; n < rep.allocation.payout.size(); ++n) {
    paid += rep.allocation.payout[n];
    raw += rep.allocation.raw[n];
  }
  const double vn = rep.ledger.value(rep.ledger.grand());
  if (raw > 0.0 && std::abs(paid - vn) > kBudgetTol)
    r.problems.push_back(fmt::format("payouts sum to {} but V(N) = {}", paid, vn));
  write(r, "ledger.csv", ledger_csv(rep.ledger));
  write(r, "allocation.csv", allocation_csv(rep.ledger, rep.allocation));
  const std::string text = valuation_text(rep);
  write(r, "valuation.txt", text);
  r.text += text;
  return r;
}

CommandResult Runner::metrics(Coalition u) {
  CommandResult r;
  const auto m = base(r);
  const auto label = file_label(u, pipeline_.sector_labels());
  auto trained = store_.load(label);
  if (trained) {
    r.text += "end-to-end models loaded from " + path("models/" + label) + "\n";
  } else {
    progress("end-to-end training, coalition " + label);
    valuation::TrainLog log;
    trained = pipeline_.train_end_to_end(u, m, &log);
    r.invariants.merge(log.invariants);
    store_.save(label, *trained);
  }
  const auto& test = pipeline_.scenario().test_days;
  const auto a = valuation::forecast_metrics(pipeline_, m, test);
  const auto b = valuation::forecast_metrics(pipeline_, *trained, test);
  write(r, "metrics_" + label + ".csv", metrics_csv(a, b));
  const std::string text = metrics_text(label, a, b);
  write(r, "metrics_" + label + ".txt", text);
  r.text += text;
  return r;
}

CommandResult synth(std::uint64_t seed, int days, const std::string& start, const std::string& path) {
  if (days < 1) throw InvalidInput("cli_harness", "synth: days must be >= 1");
  CommandResult r;
  const auto s = synth_data(synth_seed(seed), days, start);
  write_text(path, series_to_csv(s));
  r.written.push_back(path);
  r.text = fmt::format("{} hours from {} written to {}\n", s.size(), format_timestamp(s.time.front()), path);
  return r;
}

CommandResult gradcheck(std::uint64_t seed, const std::string& output_dir) {
  CommandResult r;
  std::string csv = "battery,instances,comparisons,skipped,worst,tolerance,passed\n";
  for (const auto& b : all_batteries(seed)) {
    r.text += fmt::format("{} {}\n", b.passed() ? "PASS" : "FAIL", b.summary());
    for (const auto& f : b.failures) r.text += "  " + f + "\n";
    if (!b.passed()) r.problems.push_back(b.name);
    csv += fmt::format("{},{},{},{},{},{},{}\n", b.name, b.instances, b.checked, b.skipped, b.worst, b.tolerance,
                       b.passed() ? 1 : 0);
  }
  const std::string p = (std::filesystem::path(output_dir) / "gradcheck.csv").string();
  write_text(p, csv);
  r.written.push_back(p);
  return r;
}

}  // namespace mesval::harness
