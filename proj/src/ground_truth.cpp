#include "moreau/ground_truth.hpp"

#include "moreau/error.hpp"
#include "moreau/kernels.hpp"
#include "moreau/theory.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace moreau::harness {

namespace {

constexpr double kResidualTol = 1e-9;

void fill_common(GroundTruth& gt, const TaskSuite& suite, double alpha) {
  const auto eval = kernels::envelope_eval(suite, gt.x_star, alpha);
  gt.F_star = eval.value;
  gt.grad_norm = eval.gradient.norm();
  double s = 0.0;
  for (const auto& g : eval.task_gradients) s += g.squaredNorm();
  gt.sigma_star_sq = s / static_cast<double>(suite.size());
  const double L = suite.smoothness();
  const double mu = suite.strong_convexity();
  if (mu > 0.0) gt.kappa = L / mu;
  const auto c = theory::envelope_constants(L, mu, alpha, suite.convexity());
  gt.L_F = c.L_F;
  gt.mu_F = c.mu_F;
}

const QuadraticModel& require_quadratic(const TaskLoss& task) {
  const QuadraticModel* q = task.quadratic_model();
  if (q == nullptr) throw Error(ErrorCode::kNotClosedForm, "suite is not quadratic");
  return *q;
}

}  // namespace

GroundTruth solve_ground_truth(const TaskSuite& suite, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConstants, "alpha must be > 0");
  const int d = suite.dimension();
  const Matrix I = Matrix::Identity(d, d);
  Matrix M_sum = Matrix::Zero(d, d);
  Vector rhs = Vector::Zero(d);
  for (const auto& task : suite.tasks()) {
    const QuadraticModel& q = require_quadratic(task);
    // (I + alpha A)^{-1} A; the factors commute, so M is symmetric
    const Matrix M = (I + alpha * q.A).ldlt().solve(q.A);
    M_sum += 0.5 * (M + M.transpose());
    rhs += M * q.c;
  }
  const auto ldlt = M_sum.ldlt();
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    throw Error(ErrorCode::kSingularSystem, "sum of envelope Hessians is not positive definite");
  }
  Vector x = ldlt.solve(rhs);
  x += ldlt.solve(rhs - M_sum * x);  // one refinement step

  GroundTruth gt;
  gt.x_star = x;
  fill_common(gt, suite, alpha);
  if (!(gt.grad_norm <= kResidualTol)) {
    std::ostringstream os;
    os << "|grad F(x*)| = " << gt.grad_norm << " exceeds " << kResidualTol;
    throw Error(ErrorCode::kSingularSystem, os.str());
  }
  return gt;
}

GroundTruth numerical_ground_truth(const TaskSuite& suite, double alpha, double tol,
                                   int max_iter) {
  const auto c = theory::envelope_constants(suite.smoothness(), suite.strong_convexity(), alpha,
                                            suite.convexity());
  const double beta = 1.0 / c.L_F;
  Vector x = Vector::Zero(suite.dimension());
  double norm = 0.0;
  for (int it = 0; it <= max_iter; ++it) {
    const auto eval = kernels::envelope_eval(suite, x, alpha);
    norm = eval.gradient.norm();
    if (norm <= tol) break;
    if (it == max_iter) {
      std::ostringstream os;
      os << "numerical ground truth stopped at |grad F| = " << norm << " after " << max_iter
         << " iterations";
      warn(os.str());
      break;
    }
    x -= beta * eval.gradient;
  }
  GroundTruth gt;
  gt.x_star = x;
  gt.numerical = true;
  fill_common(gt, suite, alpha);
  return gt;
}

GroundTruth ground_truth(const TaskSuite& suite, double alpha) {
  return suite.all_quadratic() ? solve_ground_truth(suite, alpha)
                               : numerical_ground_truth(suite, alpha);
}

Vector bias_fixed_point(const TaskSuite& suite, double alpha, double beta) {
  const int d = suite.dimension();
  const Matrix I = Matrix::Identity(d, d);
  Matrix B = Matrix::Zero(d, d);
  Vector rhs = Vector::Zero(d);
  for (const auto& task : suite.tasks()) {
    const QuadraticModel& q = require_quadratic(task);
    const Matrix Bi = q.A * (I - alpha * q.A);
    B += 0.5 * (Bi + Bi.transpose());
    rhs += Bi * q.c;
  }
  B /= static_cast<double>(suite.size());
  rhs /= static_cast<double>(suite.size());

  const Matrix T = I - beta * B;
  const double radius = Eigen::SelfAdjointEigenSolver<Matrix>(T, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .cwiseAbs()
                            .maxCoeff();
  if (!(radius < 1.0)) {
    std::ostringstream os;
    os << "full-batch FO-MAML map has spectral radius " << radius;
    throw Error(ErrorCode::kNonContraction, os.str());
  }
  const auto ldlt = B.ldlt();
  Vector x = ldlt.solve(rhs);
  x += ldlt.solve(rhs - B * x);
  return x;
}

double mean_squared_task_gradient(const TaskSuite& suite, const Vector& x, double alpha) {
  const auto eval = kernels::envelope_eval(suite, x, alpha);
  double s = 0.0;
  for (const auto& g : eval.task_gradients) s += g.squaredNorm();
  return s / static_cast<double>(suite.size());
}

double task_gradient_variance(const TaskSuite& suite, const Vector& x, double alpha) {
  const auto eval = kernels::envelope_eval(suite, x, alpha);
  double s = 0.0;
  for (const auto& g : eval.task_gradients) s += (g - eval.gradient).squaredNorm();
  return s / static_cast<double>(suite.size());
}

double plateau_level(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kInsufficientDecay, "empty trajectory");
  const std::size_t tail = std::max<std::size_t>(1, v.size() / 10);
  std::vector<double> last(v.end() - static_cast<std::ptrdiff_t>(tail), v.end());
  std::sort(last.begin(), last.end());
  return tail % 2 ? last[tail / 2] : 0.5 * (last[tail / 2 - 1] + last[tail / 2]);
}

RateFit fit_rate(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kInsufficientDecay, "empty trajectory");
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInsufficientDecay, "distance column has NaN");
  }
  const std::size_t n = v.size();
  const double plateau = plateau_level(v);

  RateFit fit;
  fit.plateau = plateau;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi - *lo <= 1e-15 * std::abs(*hi)) {
    fit.factor = 1.0;
    fit.points = static_cast<int>(n);
    return fit;
  }
  double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
  int m = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(v[k] > 10.0 * plateau) || !(v[k] > 0.0)) continue;
    const double kk = static_cast<double>(k);
    const double y = std::log(v[k]);
    sk += kk;
    sy += y;
    skk += kk * kk;
    sky += kk * y;
    ++m;
  }
  if (m < 2) {
    throw Error(ErrorCode::kInsufficientDecay, "no pre-plateau segment above 10x the plateau");
  }
  const double slope = (m * sky - sk * sy) / (m * skk - sk * sk);
  fit.factor = std::exp(slope);
  fit.points = m;
  return fit;
}

RateFit fit_rate(const Trajectory& trajectory) {
  std::vector<double> d;
  d.reserve(trajectory.records.size());
  for (const auto& r : trajectory.records) d.push_back(r.dist_sq);
  return fit_rate(d);
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe out;
  if (values.empty()) return out;
  double s = 0.0;
  for (double v : values) s += v;
  out.mean = s / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) /
                     static_cast<double>(values.size()));
  return out;
}

}  // namespace moreau::harness
