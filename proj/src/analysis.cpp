#include "pdflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_refs(const SeparableProblem& prob, const ReferenceSolution& refs) {
  if (refs.x_star.size() != prob.n1() || refs.y_star.size() != prob.n2() ||
      refs.lambda_star.size() != prob.m()) {
    fail(ErrorKind::Input, "reference solution does not match the problem");
  }
}

void check_traj(const Trajectory& traj, const StateLayout& layout) {
  if (traj.times.size() != traj.states.size()) {
    fail(ErrorKind::Input, "trajectory times and states differ in length");
  }
  for (const Vec& s : traj.states) {
    if (s.size() != layout.size()) {
      fail(ErrorKind::Input, "trajectory state does not match layout");
    }
  }
}

bool has_min_norm(const SeparableProblem& prob, const ReferenceSolution& refs) {
  return refs.x_bar.size() == prob.n1() && refs.y_bar.size() == prob.n2();
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& t,
                                         const std::vector<double>& v) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
  }
  return out;
}

}  // namespace

MetricSeries metrics(const Trajectory& traj, const StateLayout& layout,
                     const SeparableProblem& prob,
                     const ReferenceSolution& refs) {
  check_traj(traj, layout);
  check_refs(prob, refs);
  const bool minnorm = has_min_norm(prob, refs);
  const double lag_star =
      aug_lagrangian(prob, refs.x_star, refs.y_star, refs.lambda_star);
  const Vec gf_star = prob.f().gradient(refs.x_star);
  const Vec gg_star = prob.g().gradient(refs.y_star);

  MetricSeries out;
  out.times = traj.times;
  const std::size_t n = traj.times.size();
  for (auto* v : {&out.lagrangian_gap, &out.phi_error, &out.feasibility,
                  &out.grad_f_gap, &out.grad_g_gap, &out.minnorm_dist,
                  &out.velocity_norm}) {
    v->reserve(n);
  }
  for (const Vec& s : traj.states) {
    const Vec x = s.segment(layout.x_offset(), layout.n1);
    const Vec y = s.segment(layout.y_offset(), layout.n2);
    out.lagrangian_gap.push_back(
        aug_lagrangian(prob, x, y, refs.lambda_star) - lag_star);
    out.phi_error.push_back(std::abs(prob.objective(x, y) - refs.phi_star));
    out.feasibility.push_back(prob.residual(x, y).norm());
    out.grad_f_gap.push_back((prob.f().gradient(x) - gf_star).norm());
    out.grad_g_gap.push_back((prob.g().gradient(y) - gg_star).norm());
    out.minnorm_dist.push_back(
        minnorm ? std::sqrt((x - refs.x_bar).squaredNorm() +
                            (y - refs.y_bar).squaredNorm())
                : kNaN);
    out.velocity_norm.push_back(std::sqrt(
        s.segment(layout.vx_offset(), layout.n1).squaredNorm() +
        s.segment(layout.vy_offset(), layout.n2).squaredNorm()));
  }
  return out;
}

EnergyReport energies(const Trajectory& traj, const StateLayout& layout,
                      const SeparableProblem& prob,
                      const ReferenceSolution& refs,
                      const TikhonovParams& params) {
  check_traj(traj, layout);
  check_refs(prob, refs);
  const double delta = params.delta, gamma = params.gamma;
  const double coupling = (delta * gamma - 1.0) / (2.0 * delta * delta);
  const double lag_star =
      aug_lagrangian(prob, refs.x_star, refs.y_star, refs.lambda_star);
  const double star_sq = refs.x_star.squaredNorm() + refs.y_star.squaredNorm();

  EnergyReport out;
  out.times = traj.times;
  out.sign_indefinite = delta * gamma <= 1.0;
  out.ehat_available = has_min_norm(prob, refs);
  double lag_bar = 0.0, bar_sq = 0.0;
  if (out.ehat_available) {
    lag_bar = aug_lagrangian(prob, refs.x_bar, refs.y_bar, refs.lambda_star);
    bar_sq = refs.x_bar.squaredNorm() + refs.y_bar.squaredNorm();
  }
  const double t0 = traj.times.empty() ? 0.0 : traj.times.front();

  // Energy of the inertial-dual structure around a centre (xc, yc, λ*).
  auto kinetic = [&](const Vec& x, const Vec& y, const Vec& lam, const Vec& vx,
                     const Vec& vy, const Vec& xc, const Vec& yc) {
    const Vec dx = x - xc, dy = y - yc;
    return 0.5 * (dx / delta + vx).squaredNorm() + coupling * dx.squaredNorm() +
           0.5 * (dy / delta + vy).squaredNorm() + coupling * dy.squaredNorm() +
           (lam - refs.lambda_star).squaredNorm() / (2.0 * delta);
  };

  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const Vec& s = traj.states[i];
    const Vec x = s.segment(layout.x_offset(), layout.n1);
    const Vec y = s.segment(layout.y_offset(), layout.n2);
    const Vec lam = s.segment(layout.lam_offset(), layout.m);
    const Vec vx = s.segment(layout.vx_offset(), layout.n1);
    const Vec vy = s.segment(layout.vy_offset(), layout.n2);
    const double beta = params.beta.value(t);
    const double eps = params.eps.value(t);
    const double z_sq = x.squaredNorm() + y.squaredNorm();

    const double gap = aug_lagrangian(prob, x, y, refs.lambda_star) - lag_star;
    const double E = beta * (gap + 0.5 * eps * z_sq) +
                     kinetic(x, y, lam, vx, vy, refs.x_star, refs.y_star);
    out.E.push_back(E);
    out.Etilde.push_back(E / beta);

    if (out.ehat_available) {
      const double lag_eps_gap =
          aug_lagrangian(prob, x, y, refs.lambda_star) + 0.5 * eps * z_sq -
          (lag_bar + 0.5 * eps * bar_sq);
      out.Ehat.push_back(lag_eps_gap +
                         kinetic(x, y, lam, vx, vy, refs.x_bar, refs.y_bar) /
                             beta);
    }

    const double be_integral =
        t > t0 ? integral(CurveProduct::BetaEps, params.beta, params.eps, t0, t)
                     .value
               : 0.0;
    out.corrected.push_back(E - star_sq / (2.0 * delta) * be_integral);

    const Vec rx = (x - refs.x_star) / delta + vx;
    const Vec ry = (y - refs.y_star) / delta + vy;
    out.scaled_velocity_residual.push_back(
        std::sqrt(beta) * std::sqrt(rx.squaredNorm() + ry.squaredNorm()));
  }

  for (std::size_t i = 1; i < out.corrected.size(); ++i) {
    const double inc = out.corrected[i] - out.corrected[i - 1];
    if (inc <= 0.0) continue;
    out.monotonicity_violation = std::max(out.monotonicity_violation, inc);
    const double denom = std::max(std::abs(out.corrected[i]),
                                  std::abs(out.corrected[i - 1]));
    out.relative_monotonicity_violation =
        std::max(out.relative_monotonicity_violation,
                 denom > 0.0 ? inc / denom
                             : std::numeric_limits<double>::infinity());
  }
  return out;
}

IntegralEstimates integral_estimates(const Trajectory& traj,
                                     const StateLayout& layout,
                                     const SeparableProblem& prob,
                                     const ReferenceSolution& refs,
                                     const TikhonovParams& params) {
  check_traj(traj, layout);
  check_refs(prob, refs);
  if (traj.times.size() < kMinIntegralSamples) {
    fail(ErrorKind::Input, "integral estimates need at least 100 samples");
  }
  const double delta = params.delta, gamma = params.gamma;
  const double lag_star =
      aug_lagrangian(prob, refs.x_star, refs.y_star, refs.lambda_star);
  const std::size_t n = traj.times.size();
  std::vector<double> iv(n), ig(n), it(n), ifs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    const Vec& s = traj.states[i];
    const Vec x = s.segment(layout.x_offset(), layout.n1);
    const Vec y = s.segment(layout.y_offset(), layout.n2);
    const CurvePoint beta = params.beta.eval(t);
    const double eps = params.eps.value(t);
    const double v_sq = s.segment(layout.vx_offset(), layout.n1).squaredNorm() +
                        s.segment(layout.vy_offset(), layout.n2).squaredNorm();
    const double gap = aug_lagrangian(prob, x, y, refs.lambda_star) - lag_star;
    const double dist_sq =
        (x - refs.x_star).squaredNorm() + (y - refs.y_star).squaredNorm();
    iv[i] = (delta * gamma - 1.0) / delta * v_sq;
    ig[i] = (beta.value / delta - beta.derivative) * gap;
    it[i] = beta.value * eps / (2.0 * delta) * dist_sq;
    ifs[i] = beta.value * prob.residual(x, y).squaredNorm();
  }
  IntegralEstimates out;
  out.times = traj.times;
  out.velocity = cumulative_trapezoid(traj.times, iv);
  out.scaled_gap = cumulative_trapezoid(traj.times, ig);
  out.tikhonov = cumulative_trapezoid(traj.times, it);
  out.feasibility = cumulative_trapezoid(traj.times, ifs);
  return out;
}

RateFit fit_rate(std::span<const double> times, std::span<const double> values,
                 Window window) {
  if (times.size() != values.size()) {
    fail(ErrorKind::Input, "times and values differ in length");
  }
  RateFit fit;
  fit.window = window;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.lo || times[i] > window.hi) continue;
    if (!(values[i] > 0.0) || !(times[i] > 0.0) || !std::isfinite(values[i])) {
      ++fit.dropped;
      continue;
    }
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(values[i]));
  }
  fit.samples = static_cast<int>(lx.size());
  if (fit.samples < kMinFitSamples) {
    fail(ErrorKind::Input, "rate fit needs at least 10 positive samples");
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::Input, "rate fit window has no spread");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

double bounded_ratio(std::span<const double> times,
                     std::span<const double> values, const Curve& weight,
                     Window early, Window late) {
  if (times.size() != values.size()) {
    fail(ErrorKind::Input, "times and values differ in length");
  }
  double max_early = -std::numeric_limits<double>::infinity();
  double max_late = -std::numeric_limits<double>::infinity();
  bool any_early = false, any_late = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const bool in_early = t >= early.lo && t <= early.hi;
    const bool in_late = t >= late.lo && t <= late.hi;
    if (!in_early && !in_late) continue;
    const double w = weight.value(t) * values[i];
    if (!std::isfinite(w)) continue;
    if (in_early) {
      max_early = std::max(max_early, w);
      any_early = true;
    }
    if (in_late) {
      max_late = std::max(max_late, w);
      any_late = true;
    }
  }
  if (!any_early || !any_late) {
    fail(ErrorKind::Input, "bounded_ratio window contains no samples");
  }
  return max_late / max_early;
}

double tikhonov_residual(const SeparableProblem& prob,
                         const ReferenceSolution& refs, const Vec& x,
                         const Vec& y, const Vec& x_eps, const Vec& y_eps,
                         double eps) {
  const double lhs =
      tikhonov_objective(prob, x, y, refs.lambda_star, eps) -
      tikhonov_objective(prob, refs.x_bar, refs.y_bar, refs.lambda_star, eps);
  const double dist_sq =
      (x - x_eps).squaredNorm() + (y - y_eps).squaredNorm();
  const double shift = x_eps.squaredNorm() - refs.x_bar.squaredNorm() +
                       y_eps.squaredNorm() - refs.y_bar.squaredNorm();
  return lhs - 0.5 * eps * dist_sq - 0.5 * eps * shift;
}

TikhonovPathSeries tikhonov_path(const Trajectory& traj,
                                 const StateLayout& layout,
                                 const SeparableProblem& prob,
                                 const ReferenceSolution& refs,
                                 const Curve& eps) {
  check_traj(traj, layout);
  check_refs(prob, refs);
  if (!has_min_norm(prob, refs)) {
    fail(ErrorKind::Input, "tikhonov_path needs the minimal-norm solution");
  }
  TikhonovPathSeries out;
  out.times = traj.times;
  out.min_residual = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double e = eps.value(traj.times[i]);
    if (!(e > 0.0)) {
      out.path_gap.push_back(kNaN);
      out.residual.push_back(kNaN);
      out.skipped.push_back(true);
      continue;
    }
    const Vec& s = traj.states[i];
    const Vec x = s.segment(layout.x_offset(), layout.n1);
    const Vec y = s.segment(layout.y_offset(), layout.n2);
    const auto [xe, ye] = tikhonov_minimizer(prob, refs.lambda_star, e);
    out.path_gap.push_back(
        std::sqrt((x - xe).squaredNorm() + (y - ye).squaredNorm()));
    const double r = tikhonov_residual(prob, refs, x, y, xe, ye, e);
    out.residual.push_back(r);
    out.skipped.push_back(false);
    out.min_residual = std::min(out.min_residual, r);
  }
  return out;
}

}  // namespace pdflow
