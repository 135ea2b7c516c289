#include "pdflow/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExponentTol = 1e-12;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct PowerLaw {
  double c;
  double p;
  bool zero;
};

PowerLaw as_power(const Curve& curve) {
  return {curve.coefficient(), curve.exponent(),
          curve.family() == Curve::Family::Zero};
}

PowerLaw multiply(PowerLaw a, PowerLaw b) {
  if (a.zero || b.zero) return {0.0, 0.0, true};
  return {a.c * b.c, a.p + b.p, false};
}

IntegralValue power_integral(PowerLaw law, double t0, double T) {
  if (law.zero) return {0.0, false};
  if (std::isinf(T)) {
    if (law.p >= -1.0 - kExponentTol) return {kInf, true};
    return {-law.c * std::pow(t0, law.p + 1.0) / (law.p + 1.0), false};
  }
  if (std::abs(law.p + 1.0) <= kExponentTol) {
    return {law.c * std::log(T / t0), false};
  }
  const double q = law.p + 1.0;
  return {law.c * (std::pow(T, q) - std::pow(t0, q)) / q, false};
}

double simpson_step(const std::function<double(double)>& f, double a,
                    double fa, double m, double fm, double b, double fb,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

void check_damping(double gamma, double delta) {
  if (!(gamma > 0.0) || !(delta > 0.0)) {
    fail(ErrorKind::Input, "gamma and delta must be positive");
  }
}

Condition damping_condition(double gamma, double delta) {
  return {"1/delta < gamma", 1.0 / delta < gamma,
          "1/delta = " + fmt(1.0 / delta) + ", gamma = " + fmt(gamma)};
}

void finish(HypothesisVerdict& v) {
  v.ok = v.applicable &&
         std::all_of(v.conditions.begin(), v.conditions.end(),
                     [](const Condition& c) { return c.holds; });
}

// Conditions shared by all three verdicts, in the order they are reported.
struct RegimeFacts {
  Condition int_beta_eps;
  Condition int_eps;
  Condition beta_diverges;
  Condition beta_eps_diverges;
  Condition scaling;
  Condition damping;
  bool eps_zero = false;
};

RegimeReport assemble(const RegimeFacts& f, double t0, double earliest) {
  RegimeReport r;
  r.t0 = t0;
  r.earliest_valid_t = earliest;
  r.scaling_holds_from_t0 = f.scaling.holds;
  r.damping_ok = f.damping.holds;

  r.rate_bounds.conditions = {f.int_beta_eps, f.scaling, f.damping};
  r.minimal_properties.conditions = {f.int_eps, f.beta_diverges, f.scaling, f.damping};
  r.strong_convergence.conditions = {f.beta_eps_diverges, f.int_eps, f.scaling, f.damping};
  r.strong_convergence.applicable = !f.eps_zero;
  finish(r.rate_bounds);
  finish(r.minimal_properties);
  finish(r.strong_convergence);
  return r;
}

// Local log-log slope of v over the last decade before `horizon`.
std::optional<double> tail_slope(const std::function<double(double)>& v,
                                 double t0, double horizon) {
  const double lo = std::max(t0, horizon / 10.0);
  const double vlo = v(lo), vhi = v(horizon);
  if (!(vlo > 0.0) || !(vhi > 0.0) || lo >= horizon) return std::nullopt;
  return std::log(vhi / vlo) / std::log(horizon / lo);
}

}  // namespace

const char* to_string(PowerRateClass::Case c) {
  switch (c) {
    case PowerRateClass::Case::NotApplicable: return "not applicable";
    case PowerRateClass::Case::Subcritical: return "1<r2<r1+1";
    case PowerRateClass::Case::Critical: return "r2=r1+1";
  }
  return "";
}

Curve Curve::power(double c, double exponent, double t0) {
  if (!(c > 0.0) || !std::isfinite(c) || !std::isfinite(exponent)) {
    fail(ErrorKind::Input, "power curve needs c > 0 and a finite exponent");
  }
  if (!(t0 > 0.0)) fail(ErrorKind::Input, "curve start time must be positive");
  Curve out;
  out.family_ = Family::Power;
  out.c_ = c;
  out.p_ = exponent;
  out.t0_ = t0;
  return out;
}

Curve Curve::zero(double t0) {
  if (!(t0 > 0.0)) fail(ErrorKind::Input, "curve start time must be positive");
  Curve out;
  out.t0_ = t0;
  return out;
}

Curve Curve::user(Fn value, Fn derivative, double t0, std::string label) {
  if (!value || !derivative) {
    fail(ErrorKind::Input, "user curve needs value and derivative oracles");
  }
  if (!(t0 > 0.0)) fail(ErrorKind::Input, "curve start time must be positive");
  Curve out;
  out.family_ = Family::User;
  out.t0_ = t0;
  out.value_ = std::move(value);
  out.derivative_ = std::move(derivative);
  out.label_ = std::move(label);
  return out;
}

Curve Curve::with_t0(double t0) const {
  if (!(t0 > 0.0)) fail(ErrorKind::Input, "curve start time must be positive");
  Curve out = *this;
  out.t0_ = t0;
  return out;
}

CurvePoint Curve::eval(double t) const {
  if (!(t >= t0_)) {
    fail(ErrorKind::Input,
         "curve evaluated at t = " + fmt(t) + " before t0 = " + fmt(t0_));
  }
  switch (family_) {
    case Family::Zero: return {0.0, 0.0};
    case Family::Power:
      if (p_ == 0.0) return {c_, 0.0};
      return {c_ * std::pow(t, p_), c_ * p_ * std::pow(t, p_ - 1.0)};
    case Family::User: return {value_(t), derivative_(t)};
  }
  return {0.0, 0.0};
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, m, fm, b, fb, whole, tol, max_depth);
}

IntegralValue integral(CurveProduct product, const Curve& beta,
                       const Curve& eps, double t0, double T) {
  if (!(T > t0)) fail(ErrorKind::Input, "integral needs T > t0");
  const bool closed = (product == CurveProduct::Eps || beta.is_closed_form()) &&
                      (product == CurveProduct::Beta || eps.is_closed_form());
  if (closed) {
    PowerLaw law{};
    switch (product) {
      case CurveProduct::BetaEps:
        law = multiply(as_power(beta), as_power(eps));
        break;
      case CurveProduct::Eps: law = as_power(eps); break;
      case CurveProduct::Beta: law = as_power(beta); break;
    }
    return power_integral(law, t0, T);
  }
  if (std::isinf(T)) {
    fail(ErrorKind::Unsupported,
         "infinite horizon integrals need closed-form curves");
  }
  std::function<double(double)> integrand;
  switch (product) {
    case CurveProduct::BetaEps:
      integrand = [&](double t) { return beta.value(t) * eps.value(t); };
      break;
    case CurveProduct::Eps:
      integrand = [&](double t) { return eps.value(t); };
      break;
    case CurveProduct::Beta:
      integrand = [&](double t) { return beta.value(t); };
      break;
  }
  // Split on a log grid so the relative tolerance survives long horizons.
  double total = 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::log10(T / t0))) * 4);
  double lo = t0;
  for (int k = 1; k <= pieces; ++k) {
    const double hi = (k == pieces) ? T : t0 * std::pow(T / t0, double(k) / pieces);
    total += adaptive_simpson(integrand, lo, hi, 1e-10 / pieces);
    lo = hi;
  }
  return {total, false};
}

RegimeReport validate_regimes(const Curve& beta, const Curve& eps,
                              double gamma, double delta, double horizon) {
  check_damping(gamma, delta);
  if (!beta.is_closed_form() || !eps.is_closed_form()) {
    return validate_regimes_numeric(beta, eps, gamma, delta, horizon);
  }
  if (beta.family() == Curve::Family::Zero) {
    fail(ErrorKind::Input, "time scaling beta must be positive");
  }
  const double t0 = beta.t0();
  const PowerLaw b = as_power(beta), e = as_power(eps);
  const PowerLaw be = multiply(b, e);

  RegimeFacts f;
  f.eps_zero = e.zero;
  f.int_beta_eps = {"int beta*eps < inf",
                    be.zero || be.p < -1.0 - kExponentTol,
                    be.zero ? "eps = 0" : "integrand exponent " + fmt(be.p)};
  f.int_eps = {"int eps < inf", e.zero || e.p < -1.0 - kExponentTol,
               e.zero ? "eps = 0" : "eps exponent " + fmt(e.p)};
  f.beta_diverges = {"beta -> inf", b.p > kExponentTol,
                     "beta exponent " + fmt(b.p)};
  f.beta_eps_diverges = {"beta*eps -> inf", !be.zero && be.p > kExponentTol,
                         be.zero ? "eps = 0 (not applicable)"
                                 : "product exponent " + fmt(be.p)};

  // c·p·t^(p-1) ≤ c·t^p/δ  ⟺  p·δ ≤ t.
  const double threshold = b.p * delta;
  const double earliest = std::max(t0, threshold);
  f.scaling = {"beta' <= beta/delta", threshold <= t0 * (1.0 + 1e-12),
               "holds for t >= " + fmt(earliest)};
  f.damping = damping_condition(gamma, delta);

  RegimeReport r = assemble(f, t0, earliest);
  r.horizon = kInf;

  if (!e.zero) {
    PowerRateClass cls;
    cls.r1 = b.p;
    cls.r2 = -e.p;
    cls.schedule_condition = f.scaling.holds;
    cls.damping_condition = f.damping.holds;
    if (std::abs(cls.r2 - (cls.r1 + 1.0)) <= kExponentTol && cls.r2 > 1.0) {
      cls.which = PowerRateClass::Case::Critical;
      cls.predicted_order = "O(ln t / t^" + fmt(cls.r1) + ")";
    } else if (cls.r2 > 1.0 && cls.r2 < cls.r1 + 1.0) {
      cls.which = PowerRateClass::Case::Subcritical;
      cls.predicted_order = "O(t^-" + fmt(cls.r2 - 1.0) + ")";
    }
    r.power_rate = cls;
  }
  return r;
}

RegimeReport validate_regimes_numeric(const Curve& beta, const Curve& eps,
                                      double gamma, double delta,
                                      double horizon) {
  check_damping(gamma, delta);
  const double t0 = beta.t0();
  if (!(horizon > t0)) fail(ErrorKind::Input, "horizon must exceed t0");

  auto bval = [&](double t) { return beta.value(t); };
  auto eval_ = [&](double t) { return eps.value(t); };
  auto beval = [&](double t) { return beta.value(t) * eps.value(t); };
  constexpr double kSlopeTol = 1e-6;

  auto integrable = [&](const std::function<double(double)>& v,
                        const char* name) {
    const auto s = tail_slope(v, t0, horizon);
    if (!s) return Condition{name, true, "integrand vanishes on the tail"};
    const double partial = adaptive_simpson(v, t0, horizon, 1e-8);
    return Condition{name, *s < -1.0 - kSlopeTol,
                     "tail slope " + fmt(*s) + ", partial integral " +
                         fmt(partial) + " (horizon-limited)"};
  };
  auto diverges = [&](const std::function<double(double)>& v,
                      const char* name) {
    const auto s = tail_slope(v, t0, horizon);
    if (!s) return Condition{name, false, "vanishes on the tail"};
    return Condition{name, *s > kSlopeTol,
                     "tail slope " + fmt(*s) + " (horizon-limited)"};
  };

  RegimeFacts f;
  f.eps_zero = eps.family() == Curve::Family::Zero;
  f.int_beta_eps = integrable(beval, "int beta*eps < inf");
  f.int_eps = integrable(eval_, "int eps < inf");
  f.beta_diverges = diverges(bval, "beta -> inf");
  f.beta_eps_diverges = diverges(beval, "beta*eps -> inf");

  constexpr int kGrid = 4001;
  double earliest = t0;
  bool all_hold = true;
  for (int i = 0; i < kGrid; ++i) {
    const double t = t0 * std::pow(horizon / t0, double(i) / (kGrid - 1));
    const CurvePoint p = beta.eval(t);
    if (p.derivative > p.value / delta * (1.0 + 1e-12)) {
      all_hold = false;
      earliest = (i + 1 < kGrid)
                     ? t0 * std::pow(horizon / t0, double(i + 1) / (kGrid - 1))
                     : kInf;
    }
  }
  f.scaling = {"beta' <= beta/delta", all_hold,
               "holds on the grid for t >= " + fmt(earliest) +
                   " (horizon-limited)"};
  f.damping = damping_condition(gamma, delta);

  RegimeReport r = assemble(f, t0, earliest);
  r.horizon_limited = true;
  r.horizon = horizon;
  return r;
}

}  // namespace pdflow
