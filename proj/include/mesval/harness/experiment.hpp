#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "mesval/harness/series.hpp"
#include "mesval/valuation/pipeline.hpp"

namespace mesval::harness {

/// Inclusive calendar range, YYYY-MM-DD.
struct DateRange {
  std::string from;
  std::string to;
};

struct ExperimentConfig {
  std::string hub_config;  // resolved against the config file's directory
  std::uint64_t seed = 0;
  // Exactly one of: a CSV path, or a synthetic series of `synth_days` days.
  std::string data_csv;
  int synth_days = 0;
  std::string synth_start = "2016-01-01";
  DateRange train;
  DateRange test;
  forecast::TrainingConfig training;
  valuation::Mode mode = valuation::Mode::kJoint;
  std::string output_dir = "out";

  bool synthetic() const { return data_csv.empty(); }
  /// Canonical form; paths as resolved.
  nlohmann::json to_json() const;
};

/// Throws InvalidInput on unknown keys, a missing seed, bad types or ranges.
/// Relative paths are resolved against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

/// Seed of the synthetic series for an experiment seed.
std::uint64_t synth_seed(std::uint64_t seed);

LoadSeries load_data(const ExperimentConfig& cfg);

/// Day indices of the split. Throws InvalidInput when a range is empty, lies
/// outside the data or the ranges overlap.
valuation::Scenario make_scenario(const ExperimentConfig& cfg);

/// Hash of everything that determines trained models: the config without
/// its output directory, the hub config file and the data file contents.
std::string fingerprint(const ExperimentConfig& cfg);

/// Trained models on disk under <output_dir>/models/<tag>/, one file per
/// sector plus the fingerprint of the experiment that produced them.
class ModelStore {
 public:
  ModelStore(std::string dir, std::string fingerprint);
  /// nullopt when absent or produced by a different experiment.
  std::optional<valuation::Models> load(const std::string& tag) const;
  void save(const std::string& tag, const valuation::Models& models) const;

 private:
  std::string dir_;
  std::string fingerprint_;
};

}  // namespace mesval::harness
