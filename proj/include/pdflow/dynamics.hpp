#pragma once

#include <optional>
#include <string>
#include <variant>

#include "pdflow/linalg.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/schedules.hpp"

namespace pdflow {

/// Second-order primal, first-order dual flow with time scaling β and
/// Tikhonov term ε:
///   ẍ + γẋ + β(∇ₓ𝓛(x, y, λ) + εx) = 0
///   ÿ + γẏ + β(∇ᵧ𝓛(x, y, λ) + εy) = 0
///   λ̇ = β(A(x + δẋ) + B(y + δẏ) − b)
struct TikhonovParams {
  double gamma = 10.0;
  double delta = 0.2;
  Curve beta = Curve::constant(1.0);
  Curve eps = Curve::zero();
};

/// Baseline with a second-order dual equation, time-varying damping γ(t)
/// and extrapolation δ(t), no time scaling.
struct SecondOrderDualParams {
  Curve gamma = Curve::constant(10.0);
  Curve delta = Curve::constant(0.2);
};

/// Time-rescaled inertial augmented Lagrangian baseline with damping γ(t),
/// scaling β(t), extrapolation a(t) and penalty μ ≥ 0.
struct RescaledAlmParams {
  Curve gamma = Curve::constant(10.0);
  Curve beta = Curve::power(1.0, 0.1);
  Curve a = Curve::constant(0.2);
  double mu = 1.0;
};

using SystemSpec =
    std::variant<TikhonovParams, SecondOrderDualParams, RescaledAlmParams>;

enum class SystemKind { TikhonovPD, SecondOrderDual, RescaledALM };

SystemKind kind_of(const SystemSpec& spec);
const char* to_string(SystemKind kind);
bool has_dual_velocity(SystemKind kind);

/// Rejects non-positive γ, δ and negative μ.
void validate(const SystemSpec& spec);
/// 1/δ ≥ γ: energy estimates lose their sign guarantees.
bool damping_warning(const TikhonovParams& params);

struct StateLayout {
  int n1 = 0;
  int n2 = 0;
  int m = 0;
  bool dual_velocity = false;

  int size() const { return 2 * n1 + 2 * n2 + m + (dual_velocity ? m : 0); }
  int x_offset() const { return 0; }
  int y_offset() const { return n1; }
  int lam_offset() const { return n1 + n2; }
  int vx_offset() const { return n1 + n2 + m; }
  int vy_offset() const { return 2 * n1 + n2 + m; }
  int vlam_offset() const { return 2 * n1 + 2 * n2 + m; }
};

StateLayout layout_for(const SeparableProblem& prob, SystemKind kind);

struct SystemState {
  Vec x;
  Vec y;
  Vec lam;
  Vec vx;
  Vec vy;
  std::optional<Vec> vlam;
};

/// Flat order (x, y, lam, vx, vy[, vlam]).
Vec pack(const SystemState& s);
SystemState unpack(const Vec& flat, const StateLayout& layout);

/// Time derivative in packing order: (ẋ, ẏ, λ̇, ẍ, ÿ[, λ̈]).
void vector_field(const SystemSpec& spec, const SeparableProblem& prob,
                  double t, const Vec& state, Vec& out);
Vec vector_field(const SystemSpec& spec, const SeparableProblem& prob,
                 double t, const Vec& state);
SystemState vector_field(const SystemSpec& spec, const SeparableProblem& prob,
                         double t, const SystemState& state);

/// Lipschitz and linear-growth constants of the first-order reformulation,
/// with spectral operator norms.
struct ExistenceConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double K = 0.0;
  double S = 0.0;
};

ExistenceConstants existence_constants(const SeparableProblem& prob,
                                       const TikhonovParams& params, double t);

}  // namespace pdflow
