// mesval: command-line front end of the experiment harness.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 infeasible dispatch or exhausted solver budget, 4 failed invariant check.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mesval/common/error.hpp"
#include "mesval/harness/commands.hpp"

namespace {

using namespace mesval;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInfeasible = 3, kInvariant = 4 };

int report(const harness::CommandResult& r) {
  std::cout << r.text;
  for (const auto& p : r.written) std::cerr << "wrote " << p << '\n';
  if (!r.invariants.ok()) std::cerr << "invariant check failed: " << r.invariants.summary() << '\n';
  for (const auto& p : r.problems) std::cerr << "check failed: " << p << '\n';
  return r.ok() ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-energy forecast valuation harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  auto experiment_options = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_dir, "output directory (overrides the config)");
  };

  auto* train_base = app.add_subcommand("train-base", "train the MSE benchmark forecasters");
  experiment_options(train_base);
  auto* run_fto = app.add_subcommand("run-fto", "forecast-then-optimize cost with monthly report");
  experiment_options(run_fto);
  auto* train_e2e = app.add_subcommand("train-e2e", "end-to-end training for one coalition");
  experiment_options(train_e2e);
  std::string coalition = "ehc";
  train_e2e->add_option("--coalition", coalition, "sectors trained end to end, e.g. ehc, eh, c")->required();
  auto* valuate = app.add_subcommand("valuate", "coalition ledger and allocation");
  experiment_options(valuate);
  auto* metrics = app.add_subcommand("metrics", "forecast accuracy, benchmark vs end-to-end");
  experiment_options(metrics);
  metrics->add_option("--coalition", coalition, "end-to-end coalition to compare")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "write a synthetic load series as CSV");
  std::uint64_t seed = 0;
  int days = 365;
  std::string start = "2016-01-01";
  std::string csv_path;
  synth->add_option("--seed", seed, "experiment seed")->capture_default_str();
  synth->add_option("--days", days, "number of days")->capture_default_str();
  synth->add_option("--start", start, "first day, YYYY-MM-DD")->capture_default_str();
  synth->add_option("-o,--out", csv_path, "CSV path")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference and enumeration batteries");
  std::string grad_dir = "out";
  gradcheck->add_option("--seed", seed, "battery seed")->capture_default_str();
  gradcheck->add_option("-o,--out", grad_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) return report(harness::synth(seed, days, start, csv_path));
    if (gradcheck->parsed()) return report(harness::gradcheck(seed, grad_dir));

    auto cfg = harness::load_experiment_config(config_path);
    if (out_dir) cfg.output_dir = *out_dir;
    harness::Runner runner(std::move(cfg));
    if (train_base->parsed()) return report(runner.train_base());
    if (run_fto->parsed()) return report(runner.run_fto());
    if (train_e2e->parsed()) return report(runner.train_e2e(runner.parse_coalition(coalition)));
    if (valuate->parsed()) return report(runner.valuate());
    if (metrics->parsed()) return report(runner.metrics(runner.parse_coalition(coalition)));
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const LimitExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
  return kUsage;
}
