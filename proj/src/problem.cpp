#include "pdflow/problem.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input error";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::SolverFailure: return "solver failure";
    case ErrorKind::Verification: return "verification failure";
    case ErrorKind::PoisonedState: return "poisoned state";
    case ErrorKind::Budget: return "step budget exceeded";
    case ErrorKind::Stiffness: return "step size underflow";
  }
  return "error";
}

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

namespace {

void require_dim(const Vec& v, int n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << ": expected length " << n << ", got " << v.size();
    fail(ErrorKind::Input, os.str());
  }
}

void check_args(const SeparableProblem& prob, const Vec& x, const Vec& y,
                const Vec& lam) {
  require_dim(x, prob.n1(), "x");
  require_dim(y, prob.n2(), "y");
  require_dim(lam, prob.m(), "lambda");
}

double top_eigenvalue(const Mat& P) {
  if (P.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void validate_quadratic(const QuadraticForm& qf, double lipschitz,
                        const char* name) {
  const Mat& P = qf.P;
  if (P.rows() != P.cols() || P.rows() != qf.q.size()) {
    fail(ErrorKind::Input, std::string(name) + ": P and q dimensions disagree");
  }
  if (!P.allFinite() || !qf.q.allFinite() || !std::isfinite(qf.c)) {
    fail(ErrorKind::Input, std::string(name) + ": non-finite coefficients");
  }
  const double scale = P.size() ? P.norm() : 0.0;
  if ((P - P.transpose()).norm() > 1e-12 * std::max(1.0, scale)) {
    fail(ErrorKind::Input, std::string(name) + ": P is not symmetric");
  }
  if (P.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    fail(ErrorKind::Input,
         std::string(name) + ": P is not positive semidefinite");
  }
  const double top = es.eigenvalues().maxCoeff();
  if (lipschitz < top * (1.0 - 1e-12) - 1e-14) {
    std::ostringstream os;
    os << name << ": Lipschitz constant " << lipschitz
       << " below top Hessian eigenvalue " << top;
    fail(ErrorKind::Input, os.str());
  }
}

struct KktSolve {
  Vec z;
  Vec lam;
  bool unique;
};

Mat block_hessian(const SeparableProblem& prob) {
  const int n1 = prob.n1(), n2 = prob.n2();
  Mat H = Mat::Zero(n1 + n2, n1 + n2);
  H.topLeftCorner(n1, n1) = prob.f().quadratic_form().P;
  H.bottomRightCorner(n2, n2) = prob.g().quadratic_form().P;
  return H;
}

Vec block_linear(const SeparableProblem& prob) {
  Vec h(prob.n1() + prob.n2());
  h << prob.f().quadratic_form().q, prob.g().quadratic_form().q;
  return h;
}

Mat joint_constraint(const SeparableProblem& prob) {
  Mat M(prob.m(), prob.n1() + prob.n2());
  M << prob.A(), prob.B();
  return M;
}

void require_quadratic(const SeparableProblem& prob, const char* op) {
  if (!prob.is_quadratic()) {
    fail(ErrorKind::Unsupported,
         std::string(op) + " requires quadratic f and g; supply a "
                           "ReferenceSolution for oracle problems");
  }
}

KktSolve solve_kkt(const SeparableProblem& prob) {
  const int n = prob.n1() + prob.n2();
  const int m = prob.m();
  Mat K = Mat::Zero(n + m, n + m);
  const Mat M = joint_constraint(prob);
  K.topLeftCorner(n, n) = block_hessian(prob);
  K.topRightCorner(n, m) = M.transpose();
  K.bottomLeftCorner(m, n) = M;
  Vec rhs(n + m);
  rhs << -block_linear(prob), prob.b();

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  const Vec sol = cod.solve(rhs);
  if (!sol.allFinite()) {
    fail(ErrorKind::SolverFailure, "KKT solve produced non-finite values");
  }
  return {sol.head(n), sol.tail(m), cod.rank() == n + m};
}

std::pair<Vec, Vec> min_norm_from(const SeparableProblem& prob,
                                  const KktSolve& kkt) {
  // The solution set is {z : Hz = Hz*, Mz = b}; its least-norm element is
  // the pseudo-inverse solution of that stacked system.
  const int n1 = prob.n1(), n2 = prob.n2(), m = prob.m();
  const Mat H = block_hessian(prob);
  const Mat M = joint_constraint(prob);
  Mat C(n1 + n2 + m, n1 + n2);
  C << H, M;
  Vec d(n1 + n2 + m);
  d << H * kkt.z, prob.b();
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(C);
  const Vec z = cod.solve(d);

  const Vec x = z.head(n1), y = z.tail(n2);
  const double feas = prob.residual(x, y).norm();
  const double opt = kkt_residual(prob, x, y, kkt.lam);
  if (!(feas <= 1e-8) || !(opt <= 1e-8)) {
    std::ostringstream os;
    os << "min-norm solution failed verification (feasibility " << feas
       << ", KKT residual " << opt << ")";
    fail(ErrorKind::Verification, os.str());
  }
  return {x, y};
}

// Portable uniform in [-1, 1): the mt19937_64 bit stream is fixed by the
// standard, distribution objects are not.
class PortableUniform {
 public:
  explicit PortableUniform(std::uint64_t seed) : engine_(seed) {}
  double operator()() {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

ConvexFunction ConvexFunction::quadratic(Mat P, Vec q, double c) {
  ConvexFunction fn;
  fn.dim_ = static_cast<int>(q.size());
  fn.quadratic_ = QuadraticForm{std::move(P), std::move(q), c};
  return fn;
}

ConvexFunction ConvexFunction::oracle(int dim, ValueFn value,
                                      GradientFn gradient) {
  if (dim <= 0 || !value || !gradient) {
    fail(ErrorKind::Input, "oracle function needs a positive dimension, "
                           "value and gradient");
  }
  ConvexFunction fn;
  fn.dim_ = dim;
  fn.value_ = std::move(value);
  fn.gradient_ = std::move(gradient);
  return fn;
}

double ConvexFunction::value(const Vec& x) const {
  if (quadratic_) {
    const auto& q = *quadratic_;
    return 0.5 * x.dot(q.P * x) + q.q.dot(x) + q.c;
  }
  return value_(x);
}

Vec ConvexFunction::gradient(const Vec& x) const {
  if (quadratic_) return quadratic_->P * x + quadratic_->q;
  return gradient_(x);
}

const QuadraticForm& ConvexFunction::quadratic_form() const {
  if (!quadratic_) fail(ErrorKind::Unsupported, "not a quadratic function");
  return *quadratic_;
}

SeparableProblem::SeparableProblem(ConvexFunction f, ConvexFunction g,
                                   double l1, double l2, Mat A, Mat B, Vec b)
    : f_(std::move(f)),
      g_(std::move(g)),
      l1_(l1),
      l2_(l2),
      A_(std::move(A)),
      B_(std::move(B)),
      b_(std::move(b)) {
  if (A_.rows() != b_.size() || B_.rows() != b_.size()) {
    fail(ErrorKind::Input, "A, B and b must share the constraint dimension");
  }
  if (A_.cols() != f_.dim() || B_.cols() != g_.dim()) {
    fail(ErrorKind::Input, "operator columns must match f and g dimensions");
  }
  if (f_.dim() <= 0 || g_.dim() <= 0 || b_.size() <= 0) {
    fail(ErrorKind::Input, "dimensions must be positive");
  }
  if (!A_.allFinite() || !B_.allFinite() || !b_.allFinite()) {
    fail(ErrorKind::Input, "non-finite constraint data");
  }
  if (!(l1_ >= 0.0) || !(l2_ >= 0.0) || !std::isfinite(l1_) ||
      !std::isfinite(l2_)) {
    fail(ErrorKind::Input, "Lipschitz constants must be finite and >= 0");
  }
  if (f_.is_quadratic()) validate_quadratic(f_.quadratic_form(), l1_, "f");
  if (g_.is_quadratic()) validate_quadratic(g_.quadratic_form(), l2_, "g");
}

SeparableProblem SeparableProblem::from_quadratics(QuadraticForm f,
                                                   QuadraticForm g, Mat A,
                                                   Mat B, Vec b) {
  const double l1 = std::max(0.0, top_eigenvalue(f.P));
  const double l2 = std::max(0.0, top_eigenvalue(g.P));
  return SeparableProblem(
      ConvexFunction::quadratic(std::move(f.P), std::move(f.q), f.c),
      ConvexFunction::quadratic(std::move(g.P), std::move(g.q), g.c), l1, l2,
      std::move(A), std::move(B), std::move(b));
}

double SeparableProblem::objective(const Vec& x, const Vec& y) const {
  return f_.value(x) + g_.value(y);
}

Vec SeparableProblem::residual(const Vec& x, const Vec& y) const {
  return A_ * x + B_ * y - b_;
}

double lagrangian(const SeparableProblem& prob, const Vec& x, const Vec& y,
                  const Vec& lam) {
  check_args(prob, x, y, lam);
  return prob.objective(x, y) + lam.dot(prob.residual(x, y));
}

double aug_lagrangian(const SeparableProblem& prob, const Vec& x, const Vec& y,
                      const Vec& lam) {
  check_args(prob, x, y, lam);
  const Vec r = prob.residual(x, y);
  return prob.objective(x, y) + lam.dot(r) + 0.5 * r.squaredNorm();
}

std::pair<Vec, Vec> grad_aug_lagrangian(const SeparableProblem& prob,
                                        const Vec& x, const Vec& y,
                                        const Vec& lam) {
  check_args(prob, x, y, lam);
  const Vec w = lam + prob.residual(x, y);
  return {prob.f().gradient(x) + prob.A().transpose() * w,
          prob.g().gradient(y) + prob.B().transpose() * w};
}

double kkt_residual(const SeparableProblem& prob, const Vec& x, const Vec& y,
                    const Vec& lam) {
  check_args(prob, x, y, lam);
  const double sx =
      (prob.f().gradient(x) + prob.A().transpose() * lam).squaredNorm();
  const double sy =
      (prob.g().gradient(y) + prob.B().transpose() * lam).squaredNorm();
  const double sr = prob.residual(x, y).squaredNorm();
  return std::sqrt(sx + sy + sr);
}

ReferenceSolution solve_saddle_point(const SeparableProblem& prob) {
  require_quadratic(prob, "solve_saddle_point");
  const KktSolve kkt = solve_kkt(prob);
  ReferenceSolution ref;
  ref.x_star = kkt.z.head(prob.n1());
  ref.y_star = kkt.z.tail(prob.n2());
  ref.lambda_star = kkt.lam;
  ref.unique = kkt.unique;
  ref.kkt_residual =
      kkt_residual(prob, ref.x_star, ref.y_star, ref.lambda_star);
  if (!(ref.kkt_residual < kKktTolerance)) {
    std::ostringstream os;
    os << "KKT residual " << ref.kkt_residual << " exceeds tolerance "
       << kKktTolerance << " (system may be inconsistent)";
    fail(ErrorKind::SolverFailure, os.str());
  }
  ref.phi_star = prob.objective(ref.x_star, ref.y_star);
  std::tie(ref.x_bar, ref.y_bar) = min_norm_from(prob, kkt);
  return ref;
}

std::pair<Vec, Vec> min_norm_solution(const SeparableProblem& prob) {
  require_quadratic(prob, "min_norm_solution");
  return min_norm_from(prob, solve_kkt(prob));
}

std::pair<Vec, Vec> tikhonov_minimizer(const SeparableProblem& prob,
                                       const Vec& lambda_bar, double eps) {
  require_quadratic(prob, "tikhonov_minimizer");
  require_dim(lambda_bar, prob.m(), "lambda_bar");
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    fail(ErrorKind::Input, "Tikhonov parameter must be positive");
  }
  const int n = prob.n1() + prob.n2();
  const Mat M = joint_constraint(prob);
  const Mat K = block_hessian(prob) + M.transpose() * M +
                eps * Mat::Identity(n, n);
  const Vec rhs =
      -block_linear(prob) + M.transpose() * (prob.b() - lambda_bar);
  Eigen::LLT<Mat> llt(K);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::SolverFailure, "Tikhonov system is not positive definite");
  }
  const Vec z = llt.solve(rhs);
  const double res = (K * z - rhs).norm();
  if (!(res <= 1e-10 * std::max(1.0, K.norm() * z.norm() + rhs.norm()))) {
    fail(ErrorKind::Verification, "Tikhonov minimizer failed optimality check");
  }
  return {z.head(prob.n1()), z.tail(prob.n2())};
}

double tikhonov_objective(const SeparableProblem& prob, const Vec& x,
                          const Vec& y, const Vec& lambda_bar, double eps) {
  return aug_lagrangian(prob, x, y, lambda_bar) +
         0.5 * eps * (x.squaredNorm() + y.squaredNorm());
}

namespace builtin {

SeparableProblem example1(double m, double n, double e, double d) {
  if (m == 0.0 || n == 0.0 || e == 0.0 || d == 0.0) {
    fail(ErrorKind::Input, "example1 parameters m, n, e, d must be nonzero");
  }
  Vec a(3);
  a << m, n, e;
  QuadraticForm f{2.0 * a * a.transpose(), Vec::Zero(3), 0.0};
  QuadraticForm g{Mat::Constant(1, 1, 2.0 * d), Vec::Zero(1), 0.0};
  Mat A(1, 3);
  A << m, -n, e;
  Mat B = Mat::Constant(1, 1, d);
  return SeparableProblem::from_quadratics(std::move(f), std::move(g),
                                           std::move(A), std::move(B),
                                           Vec::Zero(1));
}

SeparableProblem example2() {
  QuadraticForm f{2.0 * Mat::Identity(2, 2), Vec::Constant(2, -2.0), 2.0};
  QuadraticForm g{2.0 * Mat::Identity(2, 2), Vec::Zero(2), 0.0};
  Mat A(2, 2);
  A << 1.0, -1.0, 0.0, 1.0;
  return SeparableProblem::from_quadratics(std::move(f), std::move(g),
                                           std::move(A),
                                           -Mat::Identity(2, 2), Vec::Zero(2));
}

SeparableProblem random_qp(std::uint64_t seed, RandomQpDims dims) {
  if (dims.n1 <= 0 || dims.n2 <= 0 || dims.m <= 0) {
    fail(ErrorKind::Input, "random_qp dimensions must be positive");
  }
  PortableUniform rnd(seed);
  auto matrix = [&rnd](int r, int c) {
    Mat out(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) out(i, j) = rnd();
    return out;
  };
  auto vector = [&rnd](int n) {
    Vec out(n);
    for (int i = 0; i < n; ++i) out(i) = rnd();
    return out;
  };
  // Rank-deficient factors keep the Hessians only semidefinite.
  const Mat Gf = matrix(std::max(1, dims.n1 - 1), dims.n1);
  const Mat Gg = matrix(std::max(1, dims.n2 - 1), dims.n2);
  Mat A = matrix(dims.m, dims.n1);
  Mat B = matrix(dims.m, dims.n2);
  const Vec x0 = vector(dims.n1), y0 = vector(dims.n2), lam0 = vector(dims.m);

  Mat Pf = Gf.transpose() * Gf;
  Mat Pg = Gg.transpose() * Gg;
  Pf = 0.5 * (Pf + Pf.transpose()).eval();
  Pg = 0.5 * (Pg + Pg.transpose()).eval();
  // (x0, y0, lam0) is a saddle point by construction.
  Vec qf = -Pf * x0 - A.transpose() * lam0;
  Vec qg = -Pg * y0 - B.transpose() * lam0;
  Vec b = A * x0 + B * y0;
  return SeparableProblem::from_quadratics({Pf, qf, 0.0}, {Pg, qg, 0.0},
                                           std::move(A), std::move(B),
                                           std::move(b));
}

}  // namespace builtin

}  // namespace pdflow
