#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pdflow/errors.hpp"
#include "pdflow/problem.hpp"

using namespace pdflow;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

SeparableProblem identity_qp() {
  QuadraticForm f{Mat::Identity(2, 2), Vec::Zero(2), 0.0};
  QuadraticForm g{Mat::Identity(2, 2), Vec::Zero(2), 0.0};
  return SeparableProblem::from_quadratics(f, g, Mat::Identity(2, 2),
                                           Mat::Identity(2, 2), Vec::Zero(2));
}

}  // namespace

TEST_CASE("lagrangian values on the examples") {
  const auto ex1 = builtin::example1(5, 1, 1, 5);
  CHECK(lagrangian(ex1, v({1, 1, 1}), v({1}), v({1})) == doctest::Approx(64));
  CHECK(lagrangian(ex1, Vec::Zero(3), Vec::Zero(1), v({7.5})) == 0.0);
  const auto ex2 = builtin::example2();
  CHECK(lagrangian(ex2, v({0.8, 0.6}), v({0.2, 0.6}), v({0.4, 1.2})) ==
        doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("augmented lagrangian adds half the squared residual") {
  const auto ex1 = builtin::example1(5, 1, 1, 5);
  CHECK(aug_lagrangian(ex1, v({1, 1, 1}), v({1}), v({1})) == doctest::Approx(114));
  CHECK(aug_lagrangian(ex1, Vec::Zero(3), Vec::Zero(1), Vec::Zero(1)) == 0.0);
  const auto ex2 = builtin::example2();
  const Vec x = v({0.3, -0.2}), y = v({0.5, -0.2}), lam = v({2, -1});
  CHECK(ex2.residual(x, y).norm() < 1e-15);
  CHECK(aug_lagrangian(ex2, x, y, lam) == doctest::Approx(lagrangian(ex2, x, y, lam)));
}

TEST_CASE("dimension mismatch is an input error") {
  const auto ex2 = builtin::example2();
  try {
    lagrangian(ex2, v({1}), v({1, 1}), v({1, 1}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }
}

TEST_CASE("gradient of the augmented lagrangian") {
  const auto ex1 = builtin::example1(5, 1, 1, 5);
  const auto [gx0, gy0] =
      grad_aug_lagrangian(ex1, Vec::Zero(3), Vec::Zero(1), Vec::Zero(1));
  CHECK(gx0.norm() == 0.0);
  CHECK(gy0.norm() == 0.0);

  const auto ex2 = builtin::example2();
  const auto [gx, gy] =
      grad_aug_lagrangian(ex2, v({0.8, 0.6}), v({0.2, 0.6}), v({0.4, 1.2}));
  CHECK(gx.norm() < 1e-14);
  CHECK(gy.norm() < 1e-14);

  SUBCASE("matches central differences at random points") {
    std::mt19937_64 rng(7);
    for (const auto& prob : {ex1, ex2, builtin::random_qp(3, {})}) {
      for (int k = 0; k < 10; ++k) {
        const Vec x = oracle::random_vec(rng, prob.n1(), 2.0);
        const Vec y = oracle::random_vec(rng, prob.n2(), 2.0);
        const Vec lam = oracle::random_vec(rng, prob.m(), 2.0);
        const auto [ax, ay] = grad_aug_lagrangian(prob, x, y, lam);
        const double h = 1e-5;
        for (int i = 0; i < prob.n1(); ++i) {
          Vec xp = x, xm = x;
          xp[i] += h;
          xm[i] -= h;
          const double fd = (aug_lagrangian(prob, xp, y, lam) -
                             aug_lagrangian(prob, xm, y, lam)) / (2 * h);
          CHECK(std::abs(fd - ax[i]) <= 1e-6 * std::max(1.0, std::abs(ax[i])));
        }
        for (int i = 0; i < prob.n2(); ++i) {
          Vec yp = y, ym = y;
          yp[i] += h;
          ym[i] -= h;
          const double fd = (aug_lagrangian(prob, x, yp, lam) -
                             aug_lagrangian(prob, x, ym, lam)) / (2 * h);
          CHECK(std::abs(fd - ay[i]) <= 1e-6 * std::max(1.0, std::abs(ay[i])));
        }
      }
    }
  }
}

TEST_CASE("kkt residual") {
  const auto ex1 = builtin::example1(5, 1, 1, 5);
  CHECK(kkt_residual(ex1, Vec::Zero(3), Vec::Zero(1), Vec::Zero(1)) == 0.0);
  const auto ex2 = builtin::example2();
  CHECK(kkt_residual(ex2, v({0.8, 0.6}), v({0.2, 0.6}), v({0.4, 1.2})) < 1e-12);
  // ∇f = 2·7·(5,1,1), ∇g = 2·5·1 = 10, residual 10.
  const double expected = std::sqrt(70.0 * 70 + 14 * 14 + 14 * 14 + 10 * 10 + 10 * 10);
  CHECK(kkt_residual(ex1, v({1, 1, 1}), v({1}), Vec::Zero(1)) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("saddle point of example 2 matches the reduced problem") {
  const auto ex2 = builtin::example2();
  const ReferenceSolution ref = solve_saddle_point(ex2);
  const Vec x = oracle::example2_reduced_minimizer();
  const Vec y = v({x[0] - x[1], x[1]});
  CHECK((ref.x_star - x).norm() < 1e-12);
  CHECK((ref.y_star - y).norm() < 1e-12);
  CHECK(ref.phi_star == doctest::Approx(oracle::example2_objective(x, y)).epsilon(1e-14));
  CHECK(std::abs(ref.phi_star - 0.6) < 1e-9);
  CHECK(ref.kkt_residual < kKktTolerance);
  CHECK(ref.unique);
  // λ* from stationarity in y: 2y - λ = 0.
  CHECK((ref.lambda_star - 2.0 * y).norm() < 1e-12);
}

TEST_CASE("saddle point of example 1 has zero multiplier and value") {
  for (auto [m, n, e, d] : {std::array{5.0, 1.0, 1.0, 5.0},
                            std::array{50.0, 10.0, 15.0, 10.0}}) {
    const auto ex1 = builtin::example1(m, n, e, d);
    const ReferenceSolution ref = solve_saddle_point(ex1);
    CHECK(ref.lambda_star.norm() < 1e-10);
    CHECK(std::abs(ref.phi_star) < 1e-10);
    CHECK(ref.kkt_residual < kKktTolerance);
    CHECK_FALSE(ref.unique);
    CHECK(ref.x_bar.norm() + ref.y_bar.norm() < 1e-10);
  }
}

TEST_CASE("identity QP has the origin as saddle point") {
  const ReferenceSolution ref = solve_saddle_point(identity_qp());
  CHECK(ref.x_star.norm() < 1e-14);
  CHECK(ref.y_star.norm() < 1e-14);
  CHECK(ref.lambda_star.norm() < 1e-14);
}

TEST_CASE("oracle problems have no closed-form reference") {
  auto f = ConvexFunction::oracle(
      1, [](const Vec& x) { return x.squaredNorm(); },
      [](const Vec& x) { return Vec(2 * x); });
  auto g = ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Zero(1));
  const SeparableProblem prob(f, g, 2.0, 1.0, Mat::Ones(1, 1), Mat::Ones(1, 1),
                              Vec::Zero(1));
  CHECK_THROWS_AS(solve_saddle_point(prob), Error);
  try {
    min_norm_solution(prob);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
}

TEST_CASE("reference solution invariants on random instances") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto prob = builtin::random_qp(seed, {5, 4, 3});
    const ReferenceSolution ref = solve_saddle_point(prob);
    CHECK(ref.kkt_residual < kKktTolerance);
    CHECK(prob.residual(ref.x_bar, ref.y_bar).norm() < 1e-8);
    const double bar = std::hypot(ref.x_bar.norm(), ref.y_bar.norm());
    const double star = std::hypot(ref.x_star.norm(), ref.y_star.norm());
    CHECK(bar <= star + 1e-9);
    CHECK(std::abs(prob.objective(ref.x_bar, ref.y_bar) - ref.phi_star) < 1e-8);

    // Saddle inequality on random probes.
    std::mt19937_64 rng(seed);
    const double l_star = aug_lagrangian(prob, ref.x_star, ref.y_star, ref.lambda_star);
    for (int k = 0; k < 100; ++k) {
      const Vec x = oracle::random_vec(rng, prob.n1(), 3.0);
      const Vec y = oracle::random_vec(rng, prob.n2(), 3.0);
      const Vec lam = oracle::random_vec(rng, prob.m(), 3.0);
      CHECK(std::abs(aug_lagrangian(prob, ref.x_star, ref.y_star, lam) - l_star) < 1e-9);
      CHECK(aug_lagrangian(prob, x, y, ref.lambda_star) >= l_star - 1e-9);
    }
  }
}

TEST_CASE("min-norm solution") {
  const auto [x1, y1] = min_norm_solution(builtin::example1(5, 1, 1, 5));
  CHECK(x1.norm() < 1e-10);
  CHECK(y1.norm() < 1e-10);
  const auto [x2, y2] = min_norm_solution(builtin::example2());
  CHECK((x2 - v({0.8, 0.6})).norm() < 1e-10);
  CHECK((y2 - v({0.2, 0.6})).norm() < 1e-10);
  const auto [x3, y3] = min_norm_solution(identity_qp());
  CHECK(x3.norm() + y3.norm() < 1e-12);

  SUBCASE("is the projection of the origin onto the example 1 solution set") {
    // S = {(s, 0, -(m/e)s, 0)}: every element is at least as long.
    const auto ex1 = builtin::example1(50, 10, 15, 10);
    const auto [xb, yb] = min_norm_solution(ex1);
    for (double s : {-1.0, 0.3, 2.0}) {
      const Vec xs = v({s, 0.0, -50.0 / 15.0 * s});
      CHECK(std::abs(ex1.objective(xs, Vec::Zero(1))) < 1e-12);
      CHECK(std::hypot(xb.norm(), yb.norm()) <= xs.norm());
    }
  }
}

TEST_CASE("tikhonov minimizer") {
  const auto ex1 = builtin::example1(5, 1, 1, 5);
  for (double eps : {1.0, 1e-3}) {
    const auto [x, y] = tikhonov_minimizer(ex1, Vec::Zero(1), eps);
    CHECK(x.norm() + y.norm() < 1e-12);
  }
  const auto ex2 = builtin::example2();
  const Vec lam = v({0.4, 1.2});
  const auto [x, y] = tikhonov_minimizer(ex2, lam, 1e-6);
  CHECK((x - v({0.8, 0.6})).norm() < 1e-4);
  CHECK((y - v({0.2, 0.6})).norm() < 1e-4);
  for (double eps : {1.0, 0.1, 0.01}) {
    const auto [xe, ye] = tikhonov_minimizer(ex2, lam, eps);
    CHECK(xe.norm() <= 1.0 + 1e-12);
    CHECK(ye.norm() <= std::sqrt(0.4) + 1e-12);
  }
  CHECK_THROWS_AS(tikhonov_minimizer(ex2, lam, 0.0), Error);
  CHECK_THROWS_AS(tikhonov_minimizer(ex2, lam, -1.0), Error);

  SUBCASE("first-order optimality holds") {
    const double eps = 0.3;
    const auto [xe, ye] = tikhonov_minimizer(ex2, lam, eps);
    const auto [gx, gy] = grad_aug_lagrangian(ex2, xe, ye, lam);
    CHECK((gx + eps * xe).norm() < 1e-10);
    CHECK((gy + eps * ye).norm() < 1e-10);
  }

  SUBCASE("norms are monotone along a decreasing eps grid") {
    const auto prob = builtin::random_qp(11, {4, 3, 2});
    const ReferenceSolution ref = solve_saddle_point(prob);
    double prev_x = 0.0, prev_y = 0.0;
    double prev_total = 0.0;
    for (double eps : {10.0, 1.0, 0.1, 0.01, 1e-3, 1e-5}) {
      const auto [xe, ye] = tikhonov_minimizer(prob, ref.lambda_star, eps);
      const double total = std::hypot(xe.norm(), ye.norm());
      CHECK(total >= prev_total - 1e-10);
      prev_total = total;
      prev_x = xe.norm();
      prev_y = ye.norm();
    }
    CHECK(std::abs(prev_x - ref.x_bar.norm()) < 1e-3);
    CHECK(std::abs(prev_y - ref.y_bar.norm()) < 1e-3);
  }

  SUBCASE("strong convexity inequality at random probes") {
    const ReferenceSolution ref = solve_saddle_point(ex2);
    std::mt19937_64 rng(5);
    for (double eps : {1.0, 0.1, 0.01}) {
      const auto [xe, ye] = tikhonov_minimizer(ex2, ref.lambda_star, eps);
      for (int k = 0; k < 100; ++k) {
        const Vec x = oracle::random_vec(rng, 2, 3.0);
        const Vec y = oracle::random_vec(rng, 2, 3.0);
        const double lhs = tikhonov_objective(ex2, x, y, ref.lambda_star, eps) -
                           tikhonov_objective(ex2, ref.x_bar, ref.y_bar, ref.lambda_star, eps);
        const double rhs =
            0.5 * eps * ((x - xe).squaredNorm() + (y - ye).squaredNorm()) +
            0.5 * eps * (xe.squaredNorm() - ref.x_bar.squaredNorm() +
                         ye.squaredNorm() - ref.y_bar.squaredNorm());
        CHECK(lhs - rhs >= -1e-9);
      }
    }
  }
}

TEST_CASE("builtin instances") {
  const auto ex1 = builtin::example1(5, 1, 1, 5);
  CHECK(ex1.A().isApprox(Mat{{5, -1, 1}}));
  CHECK(ex1.B().isApprox(Mat{{5}}));
  CHECK(ex1.b().norm() == 0.0);
  const Vec a = v({5, 1, 1});
  CHECK(ex1.f().quadratic_form().P.isApprox(2.0 * a * a.transpose()));
  CHECK(ex1.l1() == doctest::Approx(2.0 * a.squaredNorm()));
  CHECK(ex1.l2() == doctest::Approx(10.0));
  CHECK_THROWS_AS(builtin::example1(0, 1, 1, 5), Error);
  CHECK_THROWS_AS(builtin::example1(5, 1, 1, 0), Error);

  const auto ex2 = builtin::example2();
  CHECK(ex2.A().isApprox(Mat{{1, -1}, {0, 1}}));
  CHECK(ex2.B().isApprox(-Mat::Identity(2, 2)));
  CHECK(ex2.f().value(v({1, 1})) == 0.0);
  CHECK(ex2.f().value(v({0, 0})) == doctest::Approx(2.0));
  CHECK(ex2.g().value(v({1, 2})) == doctest::Approx(5.0));

  const auto r1 = builtin::random_qp(42, {});
  const auto r2 = builtin::random_qp(42, {});
  CHECK(r1.A() == r2.A());
  CHECK(r1.f().quadratic_form().P == r2.f().quadratic_form().P);
  CHECK(r1.b() == r2.b());
  CHECK_FALSE(builtin::random_qp(43, {}).A() == r1.A());
}

TEST_CASE("problem validation") {
  QuadraticForm ok{Mat::Identity(2, 2), Vec::Zero(2), 0.0};
  QuadraticForm indefinite{Mat{{1, 0}, {0, -1}}, Vec::Zero(2), 0.0};
  QuadraticForm asym{Mat{{1, 1}, {0, 1}}, Vec::Zero(2), 0.0};
  const Mat I = Mat::Identity(2, 2);
  CHECK_THROWS_AS(SeparableProblem::from_quadratics(indefinite, ok, I, I, Vec::Zero(2)), Error);
  CHECK_THROWS_AS(SeparableProblem::from_quadratics(asym, ok, I, I, Vec::Zero(2)), Error);
  CHECK_THROWS_AS(SeparableProblem::from_quadratics(ok, ok, I, I, Vec::Zero(3)), Error);
  CHECK_THROWS_AS(SeparableProblem(ConvexFunction::quadratic(I, Vec::Zero(2)),
                                   ConvexFunction::quadratic(I, Vec::Zero(2)),
                                   0.5, 1.0, I, I, Vec::Zero(2)),
                  Error);
}
