#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mesval/forecast/lstm.hpp"

namespace mesval::forecast {

/// Min-max statistics of one sector's training loads (kW).
struct Normalization {
  double lo = 0.0;
  double hi = 1.0;

  /// hi - lo, or max(|hi|, 1) for a constant series.
  double scale() const;
  double to_unit(double kw) const { return (kw - lo) / scale(); }
  OutputScale output() const { return {lo, scale()}; }

  static Normalization fit(const std::vector<double>& loads);
};

/// Per-hour features: normalized load, sin/cos hour of day, sin/cos day of
/// week.
inline constexpr int kFeatureDim = 5;

/// Feature rows for the `window` hours before hour index `start` of an hourly
/// series whose index 0 is midnight of weekday `weekday0` (0 = Monday).
/// Throws InvalidInput when the window reaches before the series.
Matrix make_window(const std::vector<double>& loads, int start, int window, int weekday0, const Normalization& norm);

struct SectorModel {
  std::string sector;
  LstmParams params;
  Normalization norm;
  std::uint64_t seed = 0;

  DayForward forward(const Matrix& window) const { return forward_day(window, params, norm.output()); }
};

inline constexpr int kModelFileVersion = 1;

/// Text layout:
///   mesval-lstm <version>
///   sector <label>
///   shape <input_dim> <hidden_size> <horizon>
///   seed <seed>
///   norm <lo> <hi>
///   params <count>
///   <one value per line, LstmParams::flatten order, %.17g>
void save_model(const SectorModel& model, const std::string& path);
SectorModel load_model(const std::string& path);
std::string model_to_text(const SectorModel& model);
SectorModel model_from_text(const std::string& text);

enum class Optimizer { kGradientDescent, kAdam };

struct TrainingConfig {
  double lr = 1e-3;        // MSE pre-training step size
  int epochs_mse = 50;
  int epochs_e2e = 5;
  double lr_e2e = 1e-3;    // step size of the cost-gradient updates
  int window = 24;
  int hidden_size = 32;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One training day: the feature window and the next 24 actual loads (kW).
struct Sample {
  Matrix window;
  Vector target;
};

struct MseTrace {
  SectorModel model;
  std::vector<double> loss;  // per epoch, before that epoch's update, normalized units
};

/// Mean over samples and hours of ((forecast - target) / scale)^2.
double mse_loss(const SectorModel& model, const std::vector<Sample>& samples);

/// Full-batch descent on mse_loss from LstmParams::random(seed). With
/// epochs_mse = 0 the returned params are the initialization. Throws
/// InvalidInput on an empty dataset.
MseTrace train_mse(const std::vector<Sample>& samples, const Normalization& norm, const TrainingConfig& config,
                   const std::string& sector = "");

/// Same loop from given parameters.
MseTrace train_mse_from(SectorModel model, const std::vector<Sample>& samples, const TrainingConfig& config);

struct ForecastMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent
};

/// Throws InvalidInput on length mismatch or empty input, and on a zero
/// actual when `with_mape` is set.
ForecastMetrics metrics(const std::vector<double>& forecasts, const std::vector<double>& actuals,
                        bool with_mape = true);

}  // namespace mesval::forecast
