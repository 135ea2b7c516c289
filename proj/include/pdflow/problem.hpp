#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "pdflow/linalg.hpp"

namespace pdflow {

/// ½ xᵀPx + qᵀx + c with P symmetric positive semidefinite.
struct QuadraticForm {
  Mat P;
  Vec q;
  double c = 0.0;
};

/// Smooth convex objective term: either a quadratic form or a user oracle.
class ConvexFunction {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;

  static ConvexFunction quadratic(Mat P, Vec q, double c = 0.0);
  static ConvexFunction oracle(int dim, ValueFn value, GradientFn gradient);

  int dim() const { return dim_; }
  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  bool is_quadratic() const { return quadratic_.has_value(); }
  const QuadraticForm& quadratic_form() const;

 private:
  int dim_ = 0;
  std::optional<QuadraticForm> quadratic_;
  ValueFn value_;
  GradientFn gradient_;
};

/// min f(x) + g(y) subject to Ax + By = b.
///
/// Instances are validated on construction and immutable afterwards. For
/// quadratic terms the Hessian must be PSD (eigenvalue floor
/// -1e-10·‖P‖) and the Lipschitz constant must dominate its top eigenvalue.
class SeparableProblem {
 public:
  SeparableProblem(ConvexFunction f, ConvexFunction g, double l1, double l2,
                   Mat A, Mat B, Vec b);

  /// Lipschitz constants taken as the top Hessian eigenvalues.
  static SeparableProblem from_quadratics(QuadraticForm f, QuadraticForm g,
                                          Mat A, Mat B, Vec b);

  int n1() const { return static_cast<int>(A_.cols()); }
  int n2() const { return static_cast<int>(B_.cols()); }
  int m() const { return static_cast<int>(A_.rows()); }

  const ConvexFunction& f() const { return f_; }
  const ConvexFunction& g() const { return g_; }
  double l1() const { return l1_; }
  double l2() const { return l2_; }
  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  const Vec& b() const { return b_; }

  bool is_quadratic() const { return f_.is_quadratic() && g_.is_quadratic(); }

  double objective(const Vec& x, const Vec& y) const;
  /// Ax + By - b
  Vec residual(const Vec& x, const Vec& y) const;

 private:
  ConvexFunction f_;
  ConvexFunction g_;
  double l1_;
  double l2_;
  Mat A_;
  Mat B_;
  Vec b_;
};

struct ReferenceSolution {
  Vec x_star;
  Vec y_star;
  Vec lambda_star;
  double phi_star = 0.0;
  Vec x_bar;
  Vec y_bar;
  double kkt_residual = 0.0;
  bool unique = true;
};

inline constexpr double kKktTolerance = 1e-10;

double lagrangian(const SeparableProblem& prob, const Vec& x, const Vec& y,
                  const Vec& lam);
double aug_lagrangian(const SeparableProblem& prob, const Vec& x, const Vec& y,
                      const Vec& lam);
std::pair<Vec, Vec> grad_aug_lagrangian(const SeparableProblem& prob,
                                        const Vec& x, const Vec& y,
                                        const Vec& lam);
double kkt_residual(const SeparableProblem& prob, const Vec& x, const Vec& y,
                    const Vec& lam);

/// Solves the linear KKT system of a quadratic instance. A singular system
/// yields its minimum-norm least-squares solution with `unique = false`.
/// The returned reference also carries the minimal-norm primal pair.
ReferenceSolution solve_saddle_point(const SeparableProblem& prob);

/// Projection of the origin onto the primal solution set.
std::pair<Vec, Vec> min_norm_solution(const SeparableProblem& prob);

/// argmin over (x, y) of aug_lagrangian(x, y, lambda_bar) + eps/2·‖(x, y)‖².
std::pair<Vec, Vec> tikhonov_minimizer(const SeparableProblem& prob,
                                       const Vec& lambda_bar, double eps);

/// Regularized objective aug_lagrangian(x, y, lambda_bar) + eps/2·‖(x, y)‖².
double tikhonov_objective(const SeparableProblem& prob, const Vec& x,
                          const Vec& y, const Vec& lambda_bar, double eps);

namespace builtin {

/// min (m x1 + n x2 + e x3)² + d y²  s.t. m x1 - n x2 + e x3 + d y = 0.
SeparableProblem example1(double m, double n, double e, double d);

/// min ‖x - (1,1)‖² + ‖y‖²  s.t. x - y - (x2, 0) = 0.
SeparableProblem example2();

struct RandomQpDims {
  int n1 = 4;
  int n2 = 3;
  int m = 2;
};

/// Random feasible convex QP; deterministic in `seed` across platforms.
SeparableProblem random_qp(std::uint64_t seed, RandomQpDims dims);

}  // namespace builtin

}  // namespace pdflow
