#include "pdflow/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_state(const Vec& state, const StateLayout& layout) {
  if (state.size() != layout.size()) {
    fail(ErrorKind::Input, "state length " + std::to_string(state.size()) +
                               " does not match layout size " +
                               std::to_string(layout.size()));
  }
  if (!state.allFinite()) {
    fail(ErrorKind::PoisonedState, "state contains NaN or Inf");
  }
}

struct Blocks {
  Eigen::Ref<const Vec> x, y, lam, vx, vy;
};

Blocks view(const Vec& s, const StateLayout& l) {
  return {s.segment(l.x_offset(), l.n1), s.segment(l.y_offset(), l.n2),
          s.segment(l.lam_offset(), l.m), s.segment(l.vx_offset(), l.n1),
          s.segment(l.vy_offset(), l.n2)};
}

void tikhonov_field(const TikhonovParams& p, const SeparableProblem& prob,
                    double t, const Vec& s, const StateLayout& l, Vec& out) {
  const Blocks b = view(s, l);
  const double beta = p.beta.value(t);
  const double eps = p.eps.value(t);
  const Vec r = prob.A() * b.x + prob.B() * b.y - prob.b();
  const Vec w = b.lam + r;

  out.segment(l.x_offset(), l.n1) = b.vx;
  out.segment(l.y_offset(), l.n2) = b.vy;
  out.segment(l.lam_offset(), l.m) =
      beta * (r + p.delta * (prob.A() * b.vx + prob.B() * b.vy));
  out.segment(l.vx_offset(), l.n1) =
      -p.gamma * b.vx -
      beta * (prob.f().gradient(b.x) + prob.A().transpose() * w + eps * b.x);
  out.segment(l.vy_offset(), l.n2) =
      -p.gamma * b.vy -
      beta * (prob.g().gradient(b.y) + prob.B().transpose() * w + eps * b.y);
}

void second_order_dual_field(const SecondOrderDualParams& p,
                             const SeparableProblem& prob, double t,
                             const Vec& s, const StateLayout& l, Vec& out) {
  const Blocks b = view(s, l);
  const auto vlam = s.segment(l.vlam_offset(), l.m);
  const double gamma = p.gamma.value(t);
  const double delta = p.delta.value(t);
  const Vec r = prob.A() * b.x + prob.B() * b.y - prob.b();
  const Vec w = b.lam + delta * vlam + r;

  out.segment(l.x_offset(), l.n1) = b.vx;
  out.segment(l.y_offset(), l.n2) = b.vy;
  out.segment(l.lam_offset(), l.m) = vlam;
  out.segment(l.vx_offset(), l.n1) =
      -gamma * b.vx - prob.f().gradient(b.x) - prob.A().transpose() * w;
  out.segment(l.vy_offset(), l.n2) =
      -gamma * b.vy - prob.g().gradient(b.y) - prob.B().transpose() * w;
  out.segment(l.vlam_offset(), l.m) =
      -gamma * vlam + r + delta * (prob.A() * b.vx + prob.B() * b.vy);
}

void rescaled_alm_field(const RescaledAlmParams& p,
                        const SeparableProblem& prob, double t, const Vec& s,
                        const StateLayout& l, Vec& out) {
  const Blocks b = view(s, l);
  const auto vlam = s.segment(l.vlam_offset(), l.m);
  const double gamma = p.gamma.value(t);
  const double beta = p.beta.value(t);
  const double a = p.a.value(t);
  const Vec r = prob.A() * b.x + prob.B() * b.y - prob.b();
  const Vec w = b.lam + a * vlam + p.mu * r;

  out.segment(l.x_offset(), l.n1) = b.vx;
  out.segment(l.y_offset(), l.n2) = b.vy;
  out.segment(l.lam_offset(), l.m) = vlam;
  out.segment(l.vx_offset(), l.n1) =
      -gamma * b.vx -
      beta * (prob.f().gradient(b.x) + prob.A().transpose() * w);
  out.segment(l.vy_offset(), l.n2) =
      -gamma * b.vy -
      beta * (prob.g().gradient(b.y) + prob.B().transpose() * w);
  out.segment(l.vlam_offset(), l.m) =
      -gamma * vlam +
      beta * (r + a * (prob.A() * b.vx + prob.B() * b.vy));
}

}  // namespace

SystemKind kind_of(const SystemSpec& spec) {
  return std::visit(
      overloaded{
          [](const TikhonovParams&) { return SystemKind::TikhonovPD; },
          [](const SecondOrderDualParams&) {
            return SystemKind::SecondOrderDual;
          },
          [](const RescaledAlmParams&) { return SystemKind::RescaledALM; }},
      spec);
}

const char* to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::TikhonovPD: return "tikhonov_pd";
    case SystemKind::SecondOrderDual: return "second_order_dual";
    case SystemKind::RescaledALM: return "rescaled_alm";
  }
  return "";
}

bool has_dual_velocity(SystemKind kind) {
  return kind != SystemKind::TikhonovPD;
}

void validate(const SystemSpec& spec) {
  std::visit(
      overloaded{
          [](const TikhonovParams& p) {
            if (!(p.gamma > 0.0) || !(p.delta > 0.0) ||
                !std::isfinite(p.gamma) || !std::isfinite(p.delta)) {
              fail(ErrorKind::Input, "gamma and delta must be positive");
            }
            if (p.beta.family() == Curve::Family::Zero) {
              fail(ErrorKind::Input, "time scaling beta must be positive");
            }
          },
          [](const SecondOrderDualParams&) {},
          [](const RescaledAlmParams& p) {
            if (!(p.mu >= 0.0) || !std::isfinite(p.mu)) {
              fail(ErrorKind::Input, "penalty mu must be nonnegative");
            }
          }},
      spec);
}

bool damping_warning(const TikhonovParams& params) {
  return 1.0 / params.delta >= params.gamma;
}

StateLayout layout_for(const SeparableProblem& prob, SystemKind kind) {
  return {prob.n1(), prob.n2(), prob.m(), has_dual_velocity(kind)};
}

Vec pack(const SystemState& s) {
  const StateLayout l{static_cast<int>(s.x.size()),
                      static_cast<int>(s.y.size()),
                      static_cast<int>(s.lam.size()), s.vlam.has_value()};
  if (s.vx.size() != l.n1 || s.vy.size() != l.n2 ||
      (s.vlam && s.vlam->size() != l.m)) {
    fail(ErrorKind::Input, "velocity blocks do not match position blocks");
  }
  Vec out(l.size());
  out.segment(l.x_offset(), l.n1) = s.x;
  out.segment(l.y_offset(), l.n2) = s.y;
  out.segment(l.lam_offset(), l.m) = s.lam;
  out.segment(l.vx_offset(), l.n1) = s.vx;
  out.segment(l.vy_offset(), l.n2) = s.vy;
  if (s.vlam) out.segment(l.vlam_offset(), l.m) = *s.vlam;
  return out;
}

SystemState unpack(const Vec& flat, const StateLayout& l) {
  if (flat.size() != l.size()) {
    fail(ErrorKind::Input, "flat state has wrong length for layout");
  }
  SystemState s;
  s.x = flat.segment(l.x_offset(), l.n1);
  s.y = flat.segment(l.y_offset(), l.n2);
  s.lam = flat.segment(l.lam_offset(), l.m);
  s.vx = flat.segment(l.vx_offset(), l.n1);
  s.vy = flat.segment(l.vy_offset(), l.n2);
  if (l.dual_velocity) s.vlam = flat.segment(l.vlam_offset(), l.m);
  return s;
}

void vector_field(const SystemSpec& spec, const SeparableProblem& prob,
                  double t, const Vec& state, Vec& out) {
  const StateLayout l = layout_for(prob, kind_of(spec));
  check_state(state, l);
  out.resize(l.size());
  std::visit(overloaded{
                 [&](const TikhonovParams& p) {
                   tikhonov_field(p, prob, t, state, l, out);
                 },
                 [&](const SecondOrderDualParams& p) {
                   second_order_dual_field(p, prob, t, state, l, out);
                 },
                 [&](const RescaledAlmParams& p) {
                   rescaled_alm_field(p, prob, t, state, l, out);
                 }},
             spec);
}

Vec vector_field(const SystemSpec& spec, const SeparableProblem& prob,
                 double t, const Vec& state) {
  Vec out;
  vector_field(spec, prob, t, state, out);
  return out;
}

SystemState vector_field(const SystemSpec& spec, const SeparableProblem& prob,
                         double t, const SystemState& state) {
  const StateLayout l = layout_for(prob, kind_of(spec));
  if (state.vlam.has_value() != l.dual_velocity) {
    fail(ErrorKind::Input, "dual velocity block does not match system kind");
  }
  return unpack(vector_field(spec, prob, t, pack(state)), l);
}

ExistenceConstants existence_constants(const SeparableProblem& prob,
                                       const TikhonovParams& params,
                                       double t) {
  const Mat& A = prob.A();
  const Mat& B = prob.B();
  const double nA = spectral_norm(A), nB = spectral_norm(B);
  const double nAt = spectral_norm(A.transpose());
  const double nBt = spectral_norm(B.transpose());
  const double nAtA = spectral_norm(A.transpose() * A);
  const double nBtA = spectral_norm(B.transpose() * A);
  const double nAtB = spectral_norm(A.transpose() * B);
  const double nBtB = spectral_norm(B.transpose() * B);
  const double gamma = params.gamma;

  ExistenceConstants c;
  c.C1 = std::max({1.0 + gamma, nAt + nBt, nA + nAtA + nBtA + prob.l1(),
                   nB + nAtB + nBtB + prob.l2()});
  const Vec grad_f0 = prob.f().gradient(Vec::Zero(prob.n1()));
  const Vec grad_g0 = prob.g().gradient(Vec::Zero(prob.n2()));
  c.C2 = std::max(prob.l1() + prob.l2(),
                  grad_f0.norm() + grad_g0.norm() +
                      (A.transpose() * prob.b()).norm() +
                      (B.transpose() * prob.b()).norm());
  c.C3 = std::max({1.0 + gamma, nAt + nBt, nA + nAtA + nBtA,
                   nB + nBtB + nAtB, prob.b().norm(), c.C2});

  const double beta = params.beta.value(t);
  const double eps = params.eps.value(t);
  c.K = 2.0 * c.C1 + params.delta * beta * (nA + nB) + 3.0 * c.C1 * beta +
        2.0 * beta * eps;
  c.S = 2.0 * c.C3 + params.delta * beta * (nA + nB) + 5.0 * c.C3 * beta +
        2.0 * beta * eps;
  return c;
}

}  // namespace pdflow
