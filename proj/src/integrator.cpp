#include "pdflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                 a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output coefficients (Hairer & Wanner, dopri5).
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

constexpr double kFacMin = 0.2;
constexpr double kFacMax = 5.0;
constexpr double kPiBeta = 0.04;
constexpr double kErrExponent = 0.2 - kPiBeta * 0.75;

void check_finite(const Vec& v, double t, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << what << " produced NaN/Inf at t = " << t;
    fail(ErrorKind::PoisonedState, os.str());
  }
}

void check_common(double t0, double T, const Vec& y0) {
  if (!(T > t0) || !std::isfinite(t0) || !std::isfinite(T)) {
    fail(ErrorKind::Input, "integration needs finite T > t0");
  }
  if (!y0.allFinite()) fail(ErrorKind::PoisonedState, "initial state not finite");
}

class CountingRhs {
 public:
  CountingRhs(const OdeRhs& rhs, StepStats& stats) : rhs_(rhs), stats_(stats) {}
  void operator()(double t, const Vec& y, Vec& out) {
    rhs_(t, y, out);
    ++stats_.rhs_evals;
    check_finite(out, t, "vector field");
  }

 private:
  const OdeRhs& rhs_;
  StepStats& stats_;
};

}  // namespace

SampleGrid SampleGrid::log_spaced(int count) {
  if (count < 2) fail(ErrorKind::Input, "sample count must be at least 2");
  SampleGrid g;
  g.kind_ = Kind::LogSpaced;
  g.count_ = count;
  return g;
}

SampleGrid SampleGrid::linear(int count) {
  if (count < 2) fail(ErrorKind::Input, "sample count must be at least 2");
  SampleGrid g;
  g.kind_ = Kind::Linear;
  g.count_ = count;
  return g;
}

SampleGrid SampleGrid::explicit_times(std::vector<double> times) {
  SampleGrid g;
  g.kind_ = Kind::Explicit;
  g.times_ = std::move(times);
  g.count_ = static_cast<int>(g.times_.size());
  return g;
}

std::vector<double> SampleGrid::resolve(double t0, double T) const {
  std::vector<double> out;
  switch (kind_) {
    case Kind::LogSpaced: {
      if (!(t0 > 0.0)) {
        fail(ErrorKind::Input, "log-spaced sampling needs t0 > 0");
      }
      const double ratio = std::log(T / t0);
      out.reserve(count_);
      for (int i = 0; i < count_; ++i) {
        out.push_back(t0 * std::exp(ratio * i / (count_ - 1)));
      }
      break;
    }
    case Kind::Linear:
      out.reserve(count_);
      for (int i = 0; i < count_; ++i) {
        out.push_back(t0 + (T - t0) * i / (count_ - 1));
      }
      break;
    case Kind::Explicit:
      for (double t : times_) {
        if (!(t >= t0 && t <= T)) {
          fail(ErrorKind::Input, "explicit sample outside [t0, T]");
        }
        out.push_back(t);
      }
      out.push_back(t0);
      std::sort(out.begin(), out.end());
      break;
  }
  out.front() = t0;
  if (out.back() != T) out.push_back(T);
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return !(b > a); }),
            out.end());
  if (out.back() != T) out.back() = T;
  return out;
}

Trajectory integrate(const OdeRhs& rhs, double t0, double T, const Vec& y0,
                     const IntegratorConfig& cfg, const SampleGrid& samples) {
  check_common(t0, T, y0);
  const double h_max = cfg.h_max.value_or((T - t0) / 10.0);
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0) || !(cfg.h_init > 0.0) ||
      !(h_max > 0.0) || cfg.h_init > h_max || cfg.max_steps <= 0 ||
      !(cfg.safety > 0.0 && cfg.safety < 1.0)) {
    fail(ErrorKind::Input, "invalid integrator configuration");
  }

  Trajectory traj;
  const std::vector<double> grid = samples.resolve(t0, T);
  traj.times = grid;
  traj.states.reserve(grid.size());
  traj.states.push_back(y0);
  std::size_t next = 1;

  CountingRhs f(rhs, traj.stats);
  const Eigen::Index n = y0.size();
  Vec y = y0, y_new(n), y_stage(n);
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), err(n);
  Vec r1(n), r2(n), r3(n), r4(n), r5(n);
  double t = t0;
  double h = std::min(cfg.h_init, T - t0);
  double err_old = 1e-4;
  bool last_rejected = false;

  if (cfg.record_steps) {
    traj.step_times.push_back(t0);
    traj.step_states.push_back(y0);
  }

  f(t, y, k1);
  while (t < T) {
    if (traj.stats.accepted + traj.stats.rejected >= cfg.max_steps) {
      fail(ErrorKind::Budget, "max_steps exceeded");
    }
    bool final_step = false;
    if (t + h >= T) {
      h = T - t;
      final_step = true;
    } else if (h < 1e-14 * std::max(std::abs(t), 1.0)) {
      std::ostringstream os;
      os << "step size " << h << " underflowed at t = " << t;
      fail(ErrorKind::Stiffness, os.str());
    }

    y_stage = y + h * (a21 * k1);
    f(t + c2 * h, y_stage, k2);
    y_stage = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, y_stage, k3);
    y_stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, y_stage, k4);
    y_stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, y_stage, k5);
    y_stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double t_new = final_step ? T : t + h;
    f(t_new, y_stage, k6);
    y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(t_new, y_new, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const Vec scale =
        (cfg.atol + cfg.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array())
            .matrix();
    const double err_norm =
        std::sqrt((err.array() / scale.array()).square().mean());
    if (!std::isfinite(err_norm)) {
      fail(ErrorKind::PoisonedState, "error estimate is not finite");
    }

    if (err_norm <= 1.0) {
      // Dense output coefficients for (t, t_new].
      r1 = y;
      r2 = y_new - y;
      r3 = h * k1 - r2;
      r4 = r2 - h * k7 - r3;
      r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (next < grid.size() && grid[next] <= t_new) {
        if (grid[next] == t_new) {
          traj.states.push_back(y_new);
        } else {
          const double theta = (grid[next] - t) / h;
          const double theta1 = 1.0 - theta;
          traj.states.push_back(
              r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5))));
        }
        ++next;
      }

      ++traj.stats.accepted;
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);
      if (cfg.record_steps) {
        traj.step_times.push_back(t);
        traj.step_states.push_back(y);
      }

      double fac = cfg.safety * std::pow(std::max(err_norm, 1e-10), -kErrExponent) *
                   std::pow(err_old, kPiBeta);
      fac = std::clamp(fac, kFacMin, kFacMax);
      if (last_rejected) fac = std::min(fac, 1.0);
      traj.stats.final_step = h;
      h = std::min(h * fac, h_max);
      err_old = std::max(err_norm, 1e-4);
      last_rejected = false;
    } else {
      ++traj.stats.rejected;
      const double fac =
          std::max(kFacMin, cfg.safety * std::pow(err_norm, -0.2));
      h *= fac;
      last_rejected = true;
    }
  }

  if (traj.states.size() != grid.size()) {
    fail(ErrorKind::SolverFailure, "dense output missed sample instants");
  }
  return traj;
}

Trajectory integrate_rk4(const OdeRhs& rhs, double t0, double T, const Vec& y0,
                         double h, const SampleGrid& samples) {
  check_common(t0, T, y0);
  if (!(h > 0.0)) fail(ErrorKind::Input, "RK4 step must be positive");

  Trajectory traj;
  traj.times = samples.resolve(t0, T);
  traj.states.reserve(traj.times.size());
  traj.states.push_back(y0);

  CountingRhs f(rhs, traj.stats);
  const Eigen::Index n = y0.size();
  Vec y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = t0;
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    const double target = traj.times[i];
    while (t < target) {
      double step = h;
      bool lands = false;
      // Avoid sliver steps that would follow a near-miss of the target.
      if (t + step >= target - 1e-12 * std::max(1.0, std::abs(target))) {
        step = target - t;
        lands = true;
      }
      f(t, y, k1);
      tmp = y + 0.5 * step * k1;
      f(t + 0.5 * step, tmp, k2);
      tmp = y + 0.5 * step * k2;
      f(t + 0.5 * step, tmp, k3);
      tmp = y + step * k3;
      f(lands ? target : t + step, tmp, k4);
      y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = lands ? target : t + step;
      ++traj.stats.accepted;
      traj.stats.final_step = step;
    }
    traj.states.push_back(y);
  }
  return traj;
}

}  // namespace pdflow
