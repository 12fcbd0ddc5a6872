#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mesval/harness/batteries.hpp"
#include "mesval/harness/experiment.hpp"

namespace mesval::harness {

struct CommandResult {
  std::vector<std::string> written;  // artifact paths
  std::string text;                  // human-readable report
  hub::InvariantReport invariants;   // worst case over every dispatch the command solved
  std::vector<std::string> problems; // failed internal checks other than dispatch invariants

  bool ok() const { return problems.empty() && invariants.ok(); }
};

/// Subcommands that work on one experiment. Base models come from
/// <output_dir>/models/base when a run of the same experiment saved them,
/// otherwise they are trained and saved. Training is deterministic, so
/// reusing saved models gives the same artifacts as retraining.
class Runner {
 public:
  explicit Runner(ExperimentConfig cfg);

  const ExperimentConfig& config() const { return cfg_; }
  valuation::Pipeline& pipeline() { return pipeline_; }

  CommandResult train_base();
  CommandResult run_fto();
  CommandResult train_e2e(valuation::Coalition u);
  CommandResult valuate();
  /// Benchmark vs. the end-to-end models of coalition `u`.
  CommandResult metrics(valuation::Coalition u);

  valuation::Coalition parse_coalition(const std::string& text) const;

 private:
  valuation::Models base(CommandResult& r);
  std::string path(const std::string& name) const;
  void write(CommandResult& r, const std::string& name, const std::string& text) const;
  void write_fto(CommandResult& r, const valuation::Evaluation& fto);
  void write_e2e(CommandResult& r, valuation::Coalition u, const valuation::Evaluation& fto,
                 const valuation::Evaluation& trained, const valuation::TrainLog& log);

  ExperimentConfig cfg_;
  valuation::Pipeline pipeline_;
  ModelStore store_;
};

/// Writes the synthetic series for an experiment seed as CSV.
CommandResult synth(std::uint64_t seed, int days, const std::string& start, const std::string& path);

/// Runs every finite-difference and enumeration battery.
CommandResult gradcheck(std::uint64_t seed, const std::string& output_dir);

}  // namespace mesval::harness
