#pragma once

#include <array>
#include <functional>
#include <map>
#include <string_view>
#include <memory>
#include <vector>

#include "mesval/forecast/model.hpp"
#include "mesval/harness/series.hpp"
#include "mesval/hub/dispatch.hpp"
#include "mesval/valuation/shapley.hpp"

namespace mesval::valuation {

using forecast::Vector;
using Models = std::array<forecast::SectorModel, hub::kSectors>;

enum class Mode { kJoint, kSequential };

/// Hub prices are per kWh in currency units; reports and the training cost
/// are in thousands of them (kCNY).
inline constexpr double kCurrencyPerKcny = 1000.0;

struct Scenario {
  std::shared_ptr<const hub::HubConfig> hub;
  harness::LoadSeries series;  // starts at midnight
  std::vector<int> train_days;  // day indices into `series`
  std::vector<int> test_days;
  forecast::TrainingConfig training;
  Mode mode = Mode::kJoint;

  /// Throws InvalidInput when a day lacks a full feature window or lies
  /// outside the series, or the series does not start at midnight.
  void validate() const;
};

struct DayCost {
  int day = 0;
  harness::HourStamp start = 0;
  double cost = 0.0;  // hub currency units
  int nodes = 0;
};

struct Evaluation {
  double total = 0.0;
  std::vector<DayCost> days;
  hub::InvariantReport invariants;  // worst case over every dispatch
  int dispatches = 0;
};

struct TrainLog {
  std::vector<double> epoch_cost;  // sum of per-day costs seen during each epoch
  int degenerate = 0;              // gradients that fell back to the envelope
  hub::InvariantReport invariants;
  int dispatches = 0;
};

/// Per-sector forecast error statistics over a set of days.
std::array<forecast::ForecastMetrics, hub::kSectors> forecast_metrics(const class Pipeline& p, const Models& m,
                                                                      const std::vector<int>& days);

class Pipeline {
 public:
  explicit Pipeline(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  std::vector<std::string> sector_labels() const;

  Vector actual(int day) const;
  /// 72-slot forecast (kW); `fwd` receives the per-sector forward caches.
  Vector forecast(const Models& models, int day, std::array<forecast::DayForward, hub::kSectors>* fwd = nullptr) const;
  std::vector<forecast::Sample> samples(int sector, const std::vector<int>& days,
                                        const forecast::Normalization& norm) const;

  /// Normalization on the training days, then train_mse per sector with a
  /// sector-specific seed derived from training.seed.
  Models train_base() const;

  /// Sum of per-day dispatch costs with the models' forecasts. Each call
  /// solves the days in order from a fresh basis cache, so repeated calls
  /// are bit-identical. Throws InfeasibleError naming the day and stage.
  Evaluation evaluate(const Models& models, const std::vector<int>& days);
  /// Same with forecasts equal to the actual loads.
  Evaluation evaluate_ideal(const std::vector<int>& days);

  /// Per-day descent on the joint dispatch cost (kCNY) for the sectors in
  /// `u`; other sectors keep their parameters.
  Models train_end_to_end(Coalition u, const Models& initial, TrainLog* log = nullptr);

 private:
  const hub::DispatchProblem& joint(int day);
  Evaluation evaluate_forecasts(const std::vector<int>& days, const std::function<Vector(int)>& forecast_of);

  Scenario scenario_;
  int weekday0_ = 0;
  std::map<int, hub::DispatchProblem> joint_;
};

struct ValuationReport {
  CoalitionLedger ledger{std::vector<std::string>{"e", "h", "c"}};
  Allocation allocation;
  Models base;
  std::vector<Models> coalition_models;       // indexed by coalition
  std::vector<Evaluation> test_evaluations;   // indexed by coalition
  std::vector<TrainLog> train_logs;           // indexed by coalition
  Evaluation ideal;
};

/// Trains the base models once, runs end-to-end training for every nonempty
/// coalition from that snapshot, fills the ledger with test-split costs
/// (kCNY) and allocates V(N).
ValuationReport full_valuation(Pipeline& pipeline);
/// Same from already trained base models.
ValuationReport full_valuation(Pipeline& pipeline, const Models& base);

/// Deterministic sub-seed for a named component.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace mesval::valuation
