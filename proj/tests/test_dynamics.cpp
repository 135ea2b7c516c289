#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "pdflow/dynamics.hpp"
#include "pdflow/errors.hpp"

using namespace pdflow;

namespace {

SeparableProblem scalar_problem() {
  QuadraticForm f{Mat::Ones(1, 1), Vec::Zero(1), 0.0};
  QuadraticForm g{Mat::Ones(1, 1), Vec::Zero(1), 0.0};
  return SeparableProblem::from_quadratics(f, g, Mat::Ones(1, 1), Mat::Ones(1, 1),
                                           Vec::Zero(1));
}

TikhonovParams unit_params(double eps) {
  TikhonovParams p;
  p.gamma = 2.0;
  p.delta = 1.0;
  p.beta = Curve::constant(1.0);
  p.eps = eps == 0.0 ? Curve::zero() : Curve::constant(eps);
  return p;
}

Vec flat(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("vector field by hand substitution") {
  const auto prob = scalar_problem();
  const Vec d = vector_field(unit_params(0.0), prob, 1.0, flat({1, 1, 1, 0, 0}));
  CHECK((d - flat({0, 0, 2, -4, -4})).norm() < 1e-15);
  const Vec e = vector_field(unit_params(1.0), prob, 1.0, flat({1, 1, 1, 0, 0}));
  CHECK(e[3] == doctest::Approx(-5.0));
  CHECK(e[4] == doctest::Approx(-5.0));
}

TEST_CASE("saddle points are equilibria") {
  for (const auto& prob : {builtin::example2(), builtin::random_qp(2, {}),
                           builtin::example1(5, 1, 1, 5)}) {
    const ReferenceSolution ref = solve_saddle_point(prob);
    SystemState s{ref.x_star, ref.y_star, ref.lambda_star,
                  Vec::Zero(prob.n1()), Vec::Zero(prob.n2()), std::nullopt};
    TikhonovParams p;
    p.beta = Curve::power(1.0, 0.5);
    const Vec d = vector_field(p, prob, 3.0, pack(s));
    CHECK(d.norm() < 1e-9);
  }
}

TEST_CASE("zero derivative implies a KKT point") {
  // Build a state with zero velocity and check both directions on probes:
  // the derivative vanishes iff the KKT residual does.
  const auto prob = builtin::random_qp(9, {3, 2, 2});
  const ReferenceSolution ref = solve_saddle_point(prob);
  std::mt19937_64 rng(1);
  TikhonovParams p;
  for (int k = 0; k < 20; ++k) {
    const double scale = k == 0 ? 0.0 : 1e-3;
    const Vec x = ref.x_star + scale * oracle::random_vec(rng, prob.n1());
    const Vec y = ref.y_star + scale * oracle::random_vec(rng, prob.n2());
    const Vec lam = ref.lambda_star;
    SystemState s{x, y, lam, Vec::Zero(prob.n1()), Vec::Zero(prob.n2()), std::nullopt};
    const double dn = vector_field(p, prob, 1.0, pack(s)).norm();
    const double kkt = kkt_residual(prob, x, y, lam);
    CHECK((dn < 1e-12) == (kkt < 1e-12));
  }
}

TEST_CASE("field is affine for quadratic problems") {
  const auto prob = builtin::random_qp(4, {});
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  std::mt19937_64 rng(3);
  TikhonovParams p;
  p.beta = Curve::power(2.0, 0.4);
  p.eps = Curve::power(1.0, -2.0);
  const Vec a = oracle::random_vec(rng, l.size(), 2.0);
  const Vec b = oracle::random_vec(rng, l.size(), 2.0);
  const Vec mid = vector_field(p, prob, 2.5, Vec(0.5 * (a + b)));
  const Vec avg = 0.5 * (vector_field(p, prob, 2.5, a) + vector_field(p, prob, 2.5, b));
  CHECK((mid - avg).norm() < 1e-12 * (1.0 + avg.norm()));
}

TEST_CASE("tikhonov term only touches the primal accelerations") {
  const auto prob = builtin::random_qp(5, {});
  const StateLayout l = layout_for(prob, SystemKind::TikhonovPD);
  std::mt19937_64 rng(8);
  const Vec s = oracle::random_vec(rng, l.size());
  TikhonovParams p0, p1;
  p1.eps = Curve::constant(0.7);
  const Vec d0 = vector_field(p0, prob, 1.0, s);
  const Vec d1 = vector_field(p1, prob, 1.0, s);
  const Vec diff = d1 - d0;
  CHECK(diff.head(l.vx_offset()).norm() == 0.0);
  CHECK(diff.segment(l.vx_offset(), l.n1).isApprox(-0.7 * s.segment(l.x_offset(), l.n1)));
  CHECK(diff.segment(l.vy_offset(), l.n2).isApprox(-0.7 * s.segment(l.y_offset(), l.n2)));
}

TEST_CASE("baseline vector fields by hand substitution") {
  const auto prob = scalar_problem();
  // State (x, y, λ, ẋ, ẏ, λ̇) = (1, 1, 1, 0, 0, 1), r = 2.
  const Vec s = flat({1, 1, 1, 0, 0, 1});
  SecondOrderDualParams sod;
  sod.gamma = Curve::constant(2.0);
  sod.delta = Curve::constant(0.5);
  const Vec d = vector_field(sod, prob, 1.0, s);
  // ẍ = -∇f - (λ + δλ̇ + r) = -1 - 3.5; λ̈ = -γλ̇ + r = -2 + 2.
  CHECK((d - flat({0, 0, 1, -4.5, -4.5, 0})).norm() < 1e-14);

  RescaledAlmParams ra;
  ra.gamma = Curve::constant(2.0);
  ra.beta = Curve::constant(3.0);
  ra.a = Curve::constant(0.5);
  ra.mu = 1.0;
  const Vec e = vector_field(ra, prob, 1.0, s);
  // ẍ = -β(∇f + λ + aλ̇ + μr) = -3·4.5; λ̈ = -2 + 3·2.
  CHECK((e - flat({0, 0, 1, -13.5, -13.5, 4})).norm() < 1e-13);
}

TEST_CASE("poisoned state") {
  const auto prob = scalar_problem();
  Vec s = flat({1, std::numeric_limits<double>::quiet_NaN(), 1, 0, 0});
  try {
    vector_field(unit_params(0.0), prob, 1.0, s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PoisonedState);
  }
  CHECK_THROWS_AS(vector_field(unit_params(0.0), prob, 1.0, flat({1, 1, 1})), Error);
}

TEST_CASE("pack and unpack") {
  std::mt19937_64 rng(12);
  SystemState s{oracle::random_vec(rng, 3), oracle::random_vec(rng, 2),
                oracle::random_vec(rng, 4), oracle::random_vec(rng, 3),
                oracle::random_vec(rng, 2), std::nullopt};
  const StateLayout l{3, 2, 4, false};
  const Vec f = pack(s);
  CHECK(f.size() == l.size());
  CHECK(f.head(3) == s.x);
  const SystemState u = unpack(f, l);
  CHECK(u.x == s.x);
  CHECK(u.y == s.y);
  CHECK(u.lam == s.lam);
  CHECK(u.vx == s.vx);
  CHECK(u.vy == s.vy);
  CHECK_FALSE(u.vlam.has_value());

  s.vlam = oracle::random_vec(rng, 4);
  const StateLayout ld{3, 2, 4, true};
  const Vec fd = pack(s);
  CHECK(fd.size() == ld.size());
  CHECK(fd.tail(4) == *s.vlam);
  CHECK(*unpack(fd, ld).vlam == *s.vlam);
  CHECK_THROWS_AS(unpack(f, ld), Error);
}

TEST_CASE("existence constants") {
  const auto prob = builtin::example1(5, 1, 1, 5);
  TikhonovParams p;
  p.gamma = 10.0;
  p.delta = 1.0;
  const ExistenceConstants c = existence_constants(prob, p, 1.0);
  // Independent evaluation: A is a row vector, so its spectral norm is its
  // Euclidean norm; AᵀA = aaᵀ has norm ‖a‖².
  const double nA = std::sqrt(27.0), nB = 5.0;
  const double c1 = std::max({11.0, nA + nB, nA + 27.0 + 5.0 * nA + 54.0,
                              nB + 5.0 * nA + 25.0 + 10.0});
  CHECK(c.C1 == doctest::Approx(c1));
  CHECK(c.K == doctest::Approx(2 * c1 + (nA + nB) + 3 * c1));

  TikhonovParams q = p;
  q.beta = Curve::power(1.0, 0.5);
  q.eps = Curve::power(15.0, 1.0);
  double prev = 0.0;
  for (double t : {1.0, 2.0, 5.0, 10.0}) {
    const double k = existence_constants(prob, q, t).K;
    CHECK(k >= prev);
    prev = k;
  }
}

TEST_CASE("system validation") {
  TikhonovParams p;
  p.gamma = 0.0;
  CHECK_THROWS_AS(validate(p), Error);
  TikhonovParams q;
  q.delta = 0.1;
  CHECK(damping_warning(q));
  RescaledAlmParams r;
  r.mu = -1.0;
  CHECK_THROWS_AS(validate(r), Error);
  CHECK(std::string(to_string(kind_of(SecondOrderDualParams{}))) == "second_order_dual");
}
