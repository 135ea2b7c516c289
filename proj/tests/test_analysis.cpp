#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pdflow/analysis.hpp"
#include "pdflow/errors.hpp"

using namespace pdflow;

namespace {

/// Trajectory that sits at one state for every sample.
Trajectory frozen(const Vec& state, double t0, double T, int n) {
  Trajectory tr;
  tr.times = SampleGrid::log_spaced(n).resolve(t0, T);
  tr.states.assign(tr.times.size(), state);
  return tr;
}

Vec saddle_state(const ReferenceSolution& ref) {
  SystemState s{ref.x_star, ref.y_star, ref.lambda_star,
                Vec::Zero(ref.x_star.size()), Vec::Zero(ref.y_star.size()),
                std::nullopt};
  return pack(s);
}

Trajectory simulate(const SeparableProblem& prob, const TikhonovParams& p,
                    double T, int samples = 200) {
  const OdeRhs rhs = [&](double t, const Vec& y, Vec& out) {
    vector_field(p, prob, t, y, out);
  };
  const Vec y0 = Vec::Ones(layout_for(prob, SystemKind::TikhonovPD).size());
  return integrate(rhs, 1.0, T, y0, {}, SampleGrid::log_spaced(samples));
}

TikhonovParams example2_params(double r) {
  TikhonovParams p;
  p.gamma = 10.0;
  p.delta = 0.2;
  p.beta = Curve::power(1.0, r);
  p.eps = Curve::power(1.0, -2.0);
  return p;
}

}  // namespace

TEST_CASE("metrics vanish at the saddle point") {
  const auto prob = builtin::example2();
  const ReferenceSolution ref = solve_saddle_point(prob);
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  const MetricSeries m = metrics(frozen(saddle_state(ref), 1.0, 10.0, 20), l, prob, ref);
  for (std::size_t i = 0; i < m.times.size(); ++i) {
    CHECK(std::abs(m.lagrangian_gap[i]) < 1e-14);
    CHECK(m.phi_error[i] < 1e-14);
    CHECK(m.feasibility[i] < 1e-14);
    CHECK(m.grad_f_gap[i] < 1e-14);
    CHECK(m.grad_g_gap[i] < 1e-14);
    CHECK(m.minnorm_dist[i] < 1e-14);
  }
}

TEST_CASE("metrics at the example 1 starting point") {
  const auto prob = builtin::example1(5, 1, 1, 5);
  const ReferenceSolution ref = solve_saddle_point(prob);
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  const MetricSeries m = metrics(frozen(Vec::Ones(l.size()), 1.0, 2.0, 2), l, prob, ref);
  CHECK(m.phi_error[0] == doctest::Approx(54.0));
  CHECK(m.feasibility[0] == doctest::Approx(10.0));
  CHECK(m.minnorm_dist[0] == doctest::Approx(2.0));
}

TEST_CASE("energies at the saddle point") {
  const auto prob = builtin::example2();
  const ReferenceSolution ref = solve_saddle_point(prob);
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  TikhonovParams p = example2_params(0.4);
  p.eps = Curve::zero();
  const EnergyReport e = energies(frozen(saddle_state(ref), 1.0, 10.0, 20), l, prob, ref, p);
  for (std::size_t i = 0; i < e.times.size(); ++i) {
    CHECK(std::abs(e.E[i]) < 1e-13);
    CHECK(std::abs(e.corrected[i]) < 1e-13);
  }
  CHECK(e.monotonicity_violation < 1e-13);
  CHECK_FALSE(e.sign_indefinite);
}

TEST_CASE("energy identities along a trajectory") {
  const auto prob = builtin::example2();
  const ReferenceSolution ref = solve_saddle_point(prob);
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  const TikhonovParams p = example2_params(0.4);
  const Trajectory tr = simulate(prob, p, 20.0, 60);
  const EnergyReport e = energies(tr, l, prob, ref, p);
  REQUIRE(e.ehat_available);
  const double bar_sq = ref.x_bar.squaredNorm() + ref.y_bar.squaredNorm();
  const double lag_star = aug_lagrangian(prob, ref.x_star, ref.y_star, ref.lambda_star);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    const double beta = p.beta.value(t), eps = p.eps.value(t);
    CHECK(e.Etilde[i] == doctest::Approx(e.E[i] / beta).epsilon(1e-13));
    CHECK(e.Ehat[i] == doctest::Approx(e.Etilde[i] - 0.5 * eps * bar_sq).epsilon(1e-9));

    // Direct evaluation of E written term by term.
    const SystemState s = unpack(tr.states[i], l);
    const double d = p.delta, g = p.gamma;
    const double gap = aug_lagrangian(prob, s.x, s.y, ref.lambda_star) - lag_star;
    const Vec dx = s.x - ref.x_star, dy = s.y - ref.y_star;
    const double E = beta * (gap + 0.5 * eps * (s.x.squaredNorm() + s.y.squaredNorm())) +
                     0.5 * (dx / d + s.vx).squaredNorm() +
                     (d * g - 1) / (2 * d * d) * dx.squaredNorm() +
                     0.5 * (dy / d + s.vy).squaredNorm() +
                     (d * g - 1) / (2 * d * d) * dy.squaredNorm() +
                     (s.lam - ref.lambda_star).squaredNorm() / (2 * d);
    CHECK(e.E[i] == doctest::Approx(E).epsilon(1e-12));
    CHECK(e.E[i] >= 0.0);
    // corrected = E − ‖z*‖²/(2δ)·∫βε, with ∫₁ᵗ s^{-1.6} ds in closed form.
    const double integral = (1.0 - std::pow(t, -0.6)) / 0.6;
    CHECK(e.corrected[i] ==
          doctest::Approx(E - bar_sq / (2 * d) * integral).epsilon(1e-10));
  }
}

TEST_CASE("sign-indefinite energies are flagged") {
  const auto prob = builtin::example1(5, 1, 1, 5);
  const ReferenceSolution ref = solve_saddle_point(prob);
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  TikhonovParams p;
  p.gamma = 0.25;
  p.delta = 2.0;
  const EnergyReport e = energies(frozen(Vec::Ones(l.size()), 1.0, 2.0, 3), l, prob, ref, p);
  CHECK(e.sign_indefinite);
}

TEST_CASE("integral estimates") {
  const auto prob = builtin::example2();
  const ReferenceSolution ref = solve_saddle_point(prob);
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  TikhonovParams p = example2_params(0.4);
  p.eps = Curve::zero();

  const IntegralEstimates z =
      integral_estimates(frozen(saddle_state(ref), 1.0, 10.0, 120), l, prob, ref, p);
  CHECK(std::abs(z.velocity.back()) < 1e-14);
  CHECK(std::abs(z.scaled_gap.back()) < 1e-12);
  CHECK(std::abs(z.tikhonov.back()) < 1e-14);
  CHECK(std::abs(z.feasibility.back()) < 1e-14);

  CHECK_THROWS_AS(
      integral_estimates(frozen(saddle_state(ref), 1.0, 10.0, 50), l, prob, ref, p),
      Error);

  const TikhonovParams q = example2_params(0.4);
  const Trajectory tr = simulate(prob, q, 100.0, 400);
  const IntegralEstimates est = integral_estimates(tr, l, prob, ref, q);
  for (const auto* series : {&est.velocity, &est.scaled_gap, &est.tikhonov, &est.feasibility}) {
    for (std::size_t i = 1; i < series->size(); ++i) {
      CHECK((*series)[i] >= (*series)[i - 1] - 1e-12);
    }
  }

  SUBCASE("running integral agrees with a trapezoid written out by hand") {
    double acc = 0.0;
    const double d = q.delta;
    auto integrand = [&](std::size_t i) {
      const SystemState s = unpack(tr.states[i], l);
      return (d * q.gamma - 1) / d * (s.vx.squaredNorm() + s.vy.squaredNorm());
    };
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
      acc += 0.5 * (tr.times[i] - tr.times[i - 1]) * (integrand(i) + integrand(i - 1));
    }
    CHECK(est.velocity.back() == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("fit_rate") {
  std::vector<double> t, a, b, c;
  for (double x : SampleGrid::log_spaced(200).resolve(1.0, 1e4)) {
    t.push_back(x);
    a.push_back(1.0 / x);
    b.push_back(5.0 / std::sqrt(x));
    c.push_back((2.0 + std::sin(std::log(x))) / x);
  }
  const RateFit fa = fit_rate(t, a, {1.0, 100.0});
  CHECK(fa.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fa.r2 == doctest::Approx(1.0));
  const RateFit fb = fit_rate(t, b, {1.0, 100.0});
  CHECK(fb.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fb.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  // The oscillation biases short windows; [10, 1000] spans two decades
  // where the bias stays below 0.1.
  const RateFit fc = fit_rate(t, c, {10.0, 1000.0});
  CHECK(std::abs(fc.slope + 1.0) < 0.1);

  std::vector<double> with_zero = a;
  with_zero[50] = 0.0;
  with_zero[51] = -1.0;
  const RateFit fz = fit_rate(t, with_zero, {1.0, 100.0});
  CHECK(fz.dropped == 2);
  CHECK(fz.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_rate(t, a, {1.0, 1.05}), Error);
}

TEST_CASE("bounded_ratio") {
  const Curve beta = Curve::power(1.0, 0.4);
  std::vector<double> t, inv, inv2;
  for (double x : SampleGrid::log_spaced(200).resolve(1.0, 100.0)) {
    t.push_back(x);
    inv.push_back(1.0 / beta.value(x));
    inv2.push_back(1.0 / (beta.value(x) * beta.value(x)));
  }
  CHECK(bounded_ratio(t, inv, beta, {1, 10}, {50, 100}) == doctest::Approx(1.0));
  CHECK(bounded_ratio(t, inv2, beta, {1, 10}, {50, 100}) < 1.0);
  CHECK_THROWS_AS(bounded_ratio(t, inv, beta, {200, 300}, {50, 100}), Error);
}

TEST_CASE("gap inequalities along trajectories") {
  struct Case {
    SeparableProblem prob;
    TikhonovParams params;
    double T;
  };
  TikhonovParams ex1;
  ex1.gamma = 10.0;
  ex1.delta = 0.5;
  ex1.beta = Curve::power(1.0, 0.5);
  ex1.eps = Curve::power(15.0, -1.6);
  const Case cases[] = {{builtin::example2(), example2_params(0.4), 100.0},
                        {builtin::example1(5, 1, 1, 5), ex1, 30.0},
                        {builtin::random_qp(21, {}), example2_params(0.1), 50.0}};
  for (const Case& c : cases) {
    const ReferenceSolution ref = solve_saddle_point(c.prob);
    const StateLayout l = layout_for(c.prob, SystemKind::TikhonovPD);
    const Trajectory tr = simulate(c.prob, c.params, c.T);
    const MetricSeries m = metrics(tr, l, c.prob, ref);
    for (std::size_t i = 0; i < m.times.size(); ++i) {
      const double gap = m.lagrangian_gap[i];
      CHECK(gap >= -1e-9);
      CHECK(gap >= 0.5 * m.feasibility[i] * m.feasibility[i] - 1e-9);
      CHECK(gap >= m.grad_f_gap[i] * m.grad_f_gap[i] / (2 * c.prob.l1()) +
                       m.grad_g_gap[i] * m.grad_g_gap[i] / (2 * c.prob.l2()) - 1e-9);
    }
  }
}

TEST_CASE("tikhonov path") {
  SUBCASE("example 1 minimizer is the origin") {
    const auto prob = builtin::example1(5, 1, 1, 5);
    const ReferenceSolution ref = solve_saddle_point(prob);
    const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
    TikhonovParams p;
    p.gamma = 10.0;
    p.delta = 0.5;
    p.beta = Curve::power(1.0, 0.5);
    p.eps = Curve::power(15.0, -1.6);
    const Trajectory tr = simulate(prob, p, 10.0, 30);
    const TikhonovPathSeries path = tikhonov_path(tr, l, prob, ref, p.eps);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const SystemState s = unpack(tr.states[i], l);
      CHECK(path.path_gap[i] ==
            doctest::Approx(std::hypot(s.x.norm(), s.y.norm())).epsilon(1e-9));
      CHECK(path.residual[i] >= -1e-9);
    }
  }

  SUBCASE("residual at the path point is the unregularized gap") {
    const auto prob = builtin::example2();
    const ReferenceSolution ref = solve_saddle_point(prob);
    for (double eps : {1.0, 0.1}) {
      const auto [xe, ye] = tikhonov_minimizer(prob, ref.lambda_star, eps);
      const double r = tikhonov_residual(prob, ref, xe, ye, xe, ye, eps);
      // The regularization terms cancel, leaving L(x_ε, y_ε) − L(x̄*, ȳ*).
      const double gap = oracle::example2_objective(xe, ye) -
                         oracle::example2_objective(ref.x_bar, ref.y_bar) +
                         ref.lambda_star.dot(prob.residual(xe, ye)) +
                         0.5 * prob.residual(xe, ye).squaredNorm();
      CHECK(r == doctest::Approx(gap).epsilon(1e-9));
      CHECK(r >= 0.0);
    }
  }

  SUBCASE("residual is nonnegative at random probes") {
    const auto prob = builtin::example2();
    const ReferenceSolution ref = solve_saddle_point(prob);
    std::mt19937_64 rng(99);
    for (int k = 0; k < 100; ++k) {
      const double eps = std::pow(10.0, -4.0 * (k % 5) / 4.0);
      const auto [xe, ye] = tikhonov_minimizer(prob, ref.lambda_star, eps);
      const Vec x = oracle::random_vec(rng, 2, 3.0);
      const Vec y = oracle::random_vec(rng, 2, 3.0);
      CHECK(tikhonov_residual(prob, ref, x, y, xe, ye, eps) >= -1e-9);
    }
  }

  SUBCASE("zero eps samples are skipped") {
    const auto prob = builtin::example2();
    const ReferenceSolution ref = solve_saddle_point(prob);
    const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
    const TikhonovPathSeries path =
        tikhonov_path(frozen(saddle_state(ref), 1.0, 2.0, 4), l, prob, ref, Curve::zero());
    for (bool s : path.skipped) CHECK(s);
    CHECK(std::isnan(path.path_gap.front()));
  }
}

TEST_CASE("reference mismatch is rejected") {
  const auto prob = builtin::example2();
  const ReferenceSolution ref = solve_saddle_point(builtin::example1(5, 1, 1, 5));
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  CHECK_THROWS_AS(metrics(frozen(Vec::Ones(l.size()), 1.0, 2.0, 2), l, prob, ref), Error);
}
