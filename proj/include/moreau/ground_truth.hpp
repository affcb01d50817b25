#pragma once

#include "moreau/algorithms.hpp"
#include "moreau/tasks.hpp"

#include <optional>
#include <span>

namespace moreau::harness {

struct GroundTruth {
  Vector x_star;
  double F_star = 0.0;
  double sigma_star_sq = 0.0;  // (1/n) sum_i |grad F_i(x*)|^2
  double grad_norm = 0.0;      // |grad F(x*)| as recomputed from the reference prox
  std::optional<double> kappa;  // L / mu, empty when mu = 0
  double L_F = 0.0;
  double mu_F = 0.0;
  /// Full-batch FO-MAML fixed point, quadratic suites only.
  std::optional<Vector> x_infinity;
  /// true when x* came from running full-gd rather than a linear solve.
  bool numerical = false;
};

/// x* from (sum_i M_i) x = sum_i M_i c_i with M_i = A_i (I + alpha A_i)^{-1}.
/// Quadratic suites only (kNotClosedForm otherwise). Throws kSingularSystem
/// if the system cannot be solved to |grad F(x*)| <= 1e-9.
GroundTruth solve_ground_truth(const TaskSuite& suite, double alpha);

/// Full-gd on F with stepsize 1/L_F until |grad F| <= tol.
GroundTruth numerical_ground_truth(const TaskSuite& suite, double alpha, double tol = 1e-12,
                                   int max_iter = 200000);

/// Closed form for quadratic suites, numerical otherwise.
GroundTruth ground_truth(const TaskSuite& suite, double alpha);

/// Fixed point of x -> x - beta (1/n) sum_i A_i((I - alpha A_i) x + alpha A_i c_i - c_i),
/// i.e. full-batch FO-MAML on a quadratic suite. Throws kNonContraction when
/// the map's spectral radius is >= 1.
Vector bias_fixed_point(const TaskSuite& suite, double alpha, double beta);

/// (1/n) sum_i |grad F_i(x)|^2.
double mean_squared_task_gradient(const TaskSuite& suite, const Vector& x, double alpha);
/// (1/n) sum_i |grad F_i(x) - grad F(x)|^2.
double task_gradient_variance(const TaskSuite& suite, const Vector& x, double alpha);

struct RateFit {
  double factor = 1.0;   // per-iteration contraction of the distance column
  double plateau = 0.0;  // median of the last 10% of iterations
  int points = 0;        // number of points in the log-linear fit
};

/// Median of the last 10% of the series (at least one point).
double plateau_level(std::span<const double> values);

/// Least squares of log(v_k) on k over the points with v_k > 10 * plateau.
/// A constant series gives factor 1. Throws kInsufficientDecay when fewer
/// than two points qualify.
RateFit fit_rate(std::span<const double> dist_sq);
RateFit fit_rate(const Trajectory& trajectory);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(count); 0 for one sample
};

MeanSe mean_se(std::span<const double> values);

}  // namespace moreau::harness
