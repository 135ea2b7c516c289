#pragma once

#include <span>
#include <vector>

#include "pdflow/dynamics.hpp"
#include "pdflow/integrator.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/schedules.hpp"

namespace pdflow {

/// Pointwise convergence measures along a trajectory.
struct MetricSeries {
  std::vector<double> times;
  /// 𝓛(x, y, λ*) − 𝓛(x*, y*, λ*) with the augmented Lagrangian.
  std::vector<double> lagrangian_gap;
  std::vector<double> phi_error;
  std::vector<double> feasibility;
  std::vector<double> grad_f_gap;
  std::vector<double> grad_g_gap;
  std::vector<double> minnorm_dist;
  /// ‖(ẋ, ẏ)‖
  std::vector<double> velocity_norm;
};

MetricSeries metrics(const Trajectory& traj, const StateLayout& layout,
                     const SeparableProblem& prob,
                     const ReferenceSolution& refs);

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> E;
  std::vector<double> Etilde;
  /// Energy centred at the minimal-norm saddle point; empty when the
  /// reference carries no minimal-norm pair.
  std::vector<double> Ehat;
  /// E(t) − (‖x*‖² + ‖y*‖²)/(2δ) · ∫_{t0}^{t} βε.
  std::vector<double> corrected;
  /// √β · ‖(x − x*)/δ + ẋ, (y − y*)/δ + ẏ‖, reported only.
  std::vector<double> scaled_velocity_residual;
  /// Largest increase of `corrected` between consecutive samples.
  double monotonicity_violation = 0.0;
  /// Same, divided by max(|c_k|, |c_{k+1}|).
  double relative_monotonicity_violation = 0.0;
  /// δγ ≤ 1: E is not guaranteed nonnegative.
  bool sign_indefinite = false;
  bool ehat_available = false;
};

EnergyReport energies(const Trajectory& traj, const StateLayout& layout,
                      const SeparableProblem& prob,
                      const ReferenceSolution& refs,
                      const TikhonovParams& params);

/// Running trapezoid integrals of the four dissipation terms.
struct IntegralEstimates {
  std::vector<double> times;
  std::vector<double> velocity;     // (δγ−1)/δ · (‖ẋ‖² + ‖ẏ‖²)
  std::vector<double> scaled_gap;   // (β/δ − β̇) · gap
  std::vector<double> tikhonov;     // βε/(2δ) · ‖(x, y) − (x*, y*)‖²
  std::vector<double> feasibility;  // β · ‖Ax + By − b‖²
};

inline constexpr std::size_t kMinIntegralSamples = 100;

IntegralEstimates integral_estimates(const Trajectory& traj,
                                     const StateLayout& layout,
                                     const SeparableProblem& prob,
                                     const ReferenceSolution& refs,
                                     const TikhonovParams& params);

struct Window {
  double lo;
  double hi;
};

struct RateFit {
  Window window{0.0, 0.0};
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int samples = 0;
  /// Non-positive samples excluded from the fit.
  int dropped = 0;
};

inline constexpr int kMinFitSamples = 10;

/// Least squares on (ln t, ln v) over samples with t in `window`.
RateFit fit_rate(std::span<const double> times, std::span<const double> values,
                 Window window);

/// max_{late}(w·v) / max_{early}(w·v). Samples where the weight is not
/// finite are skipped.
double bounded_ratio(std::span<const double> times,
                     std::span<const double> values, const Curve& weight,
                     Window early, Window late);

struct TikhonovPathSeries {
  std::vector<double> times;
  /// ‖(x(t), y(t)) − (x_ε(t), y_ε(t))‖; NaN where skipped.
  std::vector<double> path_gap;
  /// Lower bound slack of the strong-convexity inequality; ≥ 0 in theory.
  std::vector<double> residual;
  std::vector<bool> skipped;
  double min_residual = 0.0;
};

/// Uses refs.lambda_star as the multiplier paired with the minimal-norm
/// solution; samples with ε(t) = 0 are skipped.
TikhonovPathSeries tikhonov_path(const Trajectory& traj,
                                 const StateLayout& layout,
                                 const SeparableProblem& prob,
                                 const ReferenceSolution& refs,
                                 const Curve& eps);

/// Residual of the Tikhonov strong-convexity inequality at a single point:
/// L_ε(x, y) − L_ε(x̄*, ȳ*) − ε/2‖(x, y) − (x_ε, y_ε)‖²
///   − ε/2(‖x_ε‖² − ‖x̄*‖² + ‖y_ε‖² − ‖ȳ*‖²).
double tikhonov_residual(const SeparableProblem& prob,
                         const ReferenceSolution& refs, const Vec& x,
                         const Vec& y, const Vec& x_eps, const Vec& y_eps,
                         double eps);

}  // namespace pdflow
