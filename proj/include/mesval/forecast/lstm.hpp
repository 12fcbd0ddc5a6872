#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace mesval::forecast {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr int kHorizon = 24;

// Gate order used by every per-gate array.
enum Gate { kForget = 0, kInputGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr int kGates = 4;

/// Pre-activation of gate k is Wx[k]' x + Wh[k]' h_prev + b[k]; the head maps
/// the final hidden state to 24 hourly values.
struct LstmParams {
  int input_dim = 0;
  int hidden_size = 0;
  std::array<Matrix, kGates> Wx;  // input_dim x hidden
  std::array<Matrix, kGates> Wh;  // hidden x hidden
  std::array<Vector, kGates> b;   // hidden
  Matrix head_W;                  // kHorizon x hidden
  Vector head_b;                  // kHorizon

  static LstmParams zeros(int input_dim, int hidden_size);
  /// Entries uniform in [-1/sqrt(hidden), 1/sqrt(hidden)].
  static LstmParams random(int input_dim, int hidden_size, std::uint64_t seed);

  int size() const;
  /// Fixed order: Wx[0..3], Wh[0..3], b[0..3], head_W, head_b; matrices
  /// column-major.
  Vector flatten() const;
  void assign(const Vector& flat);
  /// this += a * other
  void axpy(double a, const LstmParams& other);

  /// Throws InvalidInput on inconsistent shapes or non-finite entries.
  void validate() const;
};

struct LstmState {
  Vector h;
  Vector c;
  static LstmState zeros(int hidden_size);
};

/// One cell evaluation with the activations kept for backpropagation.
struct CellStep {
  Vector x;
  LstmState prev;
  LstmState next;
  std::array<Vector, kGates> gate;  // F, I, O after sigmoid; g after tanh
  Vector tanh_c;
};

CellStep lstm_cell_forward(const Vector& x, const LstmState& prev, const LstmParams& params);

/// forecast = max(0, offset + scale * head_output)
struct OutputScale {
  double offset = 0.0;
  double scale = 1.0;
};

struct DayForward {
  std::vector<CellStep> steps;
  Vector head_output;
  Vector forecast;
  std::vector<bool> clamped;
  OutputScale output;
};

/// Unrolls the cell over the rows of `window` from a zero state and applies
/// the head to the last hidden state. Throws InvalidInput on a shape
/// mismatch or non-finite features.
DayForward forward_day(const Matrix& window, const LstmParams& params, const OutputScale& output = {});

/// Exact BPTT gradient of forecast' * dloss_dforecast. Clamped slots pass no
/// gradient. Throws InvalidInput if `cache` holds no forward pass for these
/// parameters.
LstmParams backward_day(const DayForward& cache, const LstmParams& params, const Vector& dloss_dforecast);

/// One descent step params - lr * backward_day(forward_day(window), g).
LstmParams apply_external_gradient(const LstmParams& params, const Vector& g, const Matrix& window, double lr,
                                   const OutputScale& output = {});

}  // namespace mesval::forecast
