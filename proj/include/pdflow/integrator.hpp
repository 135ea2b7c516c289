#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pdflow/linalg.hpp"

namespace pdflow {

/// dy/dt = rhs(t, y); writes the derivative into `dydt`.
using OdeRhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 1e-3;
  /// Defaults to (T - t0) / 10 when unset.
  std::optional<double> h_max;
  long long max_steps = 5'000'000;
  double safety = 0.9;
  /// Keep every accepted step endpoint in the trajectory (diagnostics).
  bool record_steps = false;
};

class SampleGrid {
 public:
  enum class Kind { LogSpaced, Linear, Explicit };

  static SampleGrid log_spaced(int count = 200);
  static SampleGrid linear(int count);
  static SampleGrid explicit_times(std::vector<double> times);

  Kind kind() const { return kind_; }
  int count() const { return count_; }
  const std::vector<double>& times() const { return times_; }

  /// Strictly increasing instants in [t0, T], always including both ends.
  std::vector<double> resolve(double t0, double T) const;

 private:
  Kind kind_ = Kind::LogSpaced;
  int count_ = 200;
  std::vector<double> times_;
};

struct StepStats {
  long long accepted = 0;
  long long rejected = 0;
  long long rhs_evals = 0;
  double final_step = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  StepStats stats;
  std::vector<double> step_times;
  std::vector<Vec> step_states;
};

/// Dormand-Prince 5(4) with PI step control and 4th-order dense output.
/// Bitwise deterministic for fixed inputs.
Trajectory integrate(const OdeRhs& rhs, double t0, double T, const Vec& y0,
                     const IntegratorConfig& cfg = {},
                     const SampleGrid& samples = SampleGrid::log_spaced());

/// Classical fixed-step RK4; steps are truncated to land on every sample.
Trajectory integrate_rk4(const OdeRhs& rhs, double t0, double T, const Vec& y0,
                         double h, const SampleGrid& samples);

}  // namespace pdflow
