#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pdflow {

struct CurvePoint {
  double value;
  double derivative;
};

/// Scalar schedule on [t0, ∞): c·t^p, identically zero, or a user oracle.
class Curve {
 public:
  enum class Family { Power, Zero, User };
  using Fn = std::function<double(double)>;

  static Curve power(double c, double exponent, double t0 = 1.0);
  static Curve constant(double c, double t0 = 1.0) { return power(c, 0.0, t0); }
  static Curve zero(double t0 = 1.0);
  static Curve user(Fn value, Fn derivative, double t0 = 1.0,
                    std::string label = "user");

  /// Throws an input error for t < t0.
  CurvePoint eval(double t) const;
  double value(double t) const { return eval(t).value; }
  double derivative(double t) const { return eval(t).derivative; }

  Family family() const { return family_; }
  bool is_closed_form() const { return family_ != Family::User; }
  double coefficient() const { return c_; }
  double exponent() const { return p_; }
  double t0() const { return t0_; }
  const std::string& label() const { return label_; }

  Curve with_t0(double t0) const;

 private:
  Family family_ = Family::Zero;
  double c_ = 0.0;
  double p_ = 0.0;
  double t0_ = 1.0;
  Fn value_;
  Fn derivative_;
  std::string label_;
};

struct Condition {
  std::string name;
  bool holds = false;
  std::string detail;
};

struct HypothesisVerdict {
  bool applicable = true;
  bool ok = false;
  std::vector<Condition> conditions;
};

struct PowerRateClass {
  enum class Case { NotApplicable, Subcritical, Critical };
  Case which = Case::NotApplicable;
  double r1 = 0.0;
  double r2 = 0.0;
  /// r1·δ ≤ t0, i.e. β̇ ≤ β/δ from t0 on.
  bool schedule_condition = false;
  bool damping_condition = false;
  std::string predicted_order;
};

const char* to_string(PowerRateClass::Case c);

struct RegimeReport {
  HypothesisVerdict rate_bounds;
  HypothesisVerdict minimal_properties;
  HypothesisVerdict strong_convergence;
  std::optional<PowerRateClass> power_rate;
  double t0 = 1.0;
  /// Smallest t ≥ t0 from which β̇ ≤ β/δ holds (+∞ if never on the horizon).
  double earliest_valid_t = 1.0;
  bool scaling_holds_from_t0 = false;
  bool damping_ok = false;
  /// Set when any boolean was decided numerically on a finite horizon.
  bool horizon_limited = false;
  double horizon = 0.0;
};

inline constexpr double kDefaultRegimeHorizon = 1e4;

/// Exact exponent arithmetic for power/zero curves; otherwise falls back to
/// validate_regimes_numeric and marks the report horizon-limited.
RegimeReport validate_regimes(const Curve& beta, const Curve& eps,
                              double gamma, double delta,
                              double horizon = kDefaultRegimeHorizon);

/// Black-box checks on [t0, horizon]: tail log-log slopes for integrability
/// and divergence, a log grid for β̇ ≤ β/δ. Advisory only.
RegimeReport validate_regimes_numeric(const Curve& beta, const Curve& eps,
                                      double gamma, double delta,
                                      double horizon = kDefaultRegimeHorizon);

enum class CurveProduct { BetaEps, Eps, Beta };

struct IntegralValue {
  double value = 0.0;
  bool divergent = false;
};

/// ∫_{t0}^{T} of the chosen product. T may be +∞ for closed-form curves,
/// in which case divergence is reported through the flag.
IntegralValue integral(CurveProduct product, const Curve& beta,
                       const Curve& eps, double t0, double T);

/// Recursive adaptive Simpson with Richardson correction.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-10, int max_depth = 60);

}  // namespace pdflow
