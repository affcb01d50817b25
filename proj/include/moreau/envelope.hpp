#pragma once

#include "moreau/tasks.hpp"

#include <optional>
#include <string_view>

namespace moreau {

// Moreau envelope of a task loss f with parameter alpha > 0:
//   F(x) = min_z { f(z) + |z - x|^2 / (2 alpha) },  z(x) = argmin,
//   grad F(x) = (x - z(x)) / alpha = grad f(z(x)).

enum class InnerKind { kExact, kFixedPoint, kToDelta };

std::string_view to_string(InnerKind kind);
InnerKind inner_kind_from_string(std::string_view name);

/// How the inner (prox) problem is approximated.
///  - kExact: closed form for quadratics, otherwise the deep fixed-point reference.
///  - kFixedPoint: `steps` iterations of z <- x - gamma grad f(z) from z = x.
///  - kToDelta: fixed-point steps until the relative error of (x - z)/alpha
///    against a reference grad F(x) is at most `delta`.
struct InnerSolverSpec {
  InnerKind kind = InnerKind::kFixedPoint;
  int steps = 1;
  double delta = 0.0;
  std::optional<double> gamma;  // inner stepsize; alpha when unset
  double delta_ref = 1e-12;     // reference-prox tolerance for certification
  int step_cap = 0;             // 0: default cap for kToDelta

  static InnerSolverSpec exact();
  static InnerSolverSpec fixed_point(int steps, std::optional<double> gamma = std::nullopt);
  static InnerSolverSpec to_delta(double delta, double delta_ref);

  double gamma_or(double alpha) const { return gamma.value_or(alpha); }
  void validate() const;

  bool operator==(const InnerSolverSpec&) const = default;
};

struct InnerResult {
  Vector z;  // approximate prox point
  Vector y;  // virtual iterate z + alpha grad f(z); grad F(y) = g exactly
  Vector g;  // grad f(z), the vector the outer loop uses
  /// kToDelta: the certified ratio |(x - z)/alpha - grad F(x)| / |grad F(x)|.
  /// kFixedPoint (when measured): |g - grad F(x)| / |grad F(x)|.
  /// kExact: 0. Empty when uncertified.
  std::optional<double> certified_rel_err;
  int steps = 0;
};

/// Solves (A + I/alpha) z = A c + x/alpha with a symmetric LDL^T factorization.
Vector prox_exact_quadratic(const TaskLoss& task, const Vector& x, double alpha);

/// z_0 = x, z_{l+1} = x - gamma grad f(z_l); returns z_s. s = 0 returns x.
/// Throws kDivergence once |z| exceeds 1e12.
Vector prox_fixed_point(const TaskLoss& task, const Vector& x, double alpha, int s,
                        std::optional<double> gamma = std::nullopt);

/// High-accuracy prox: closed form for quadratics, otherwise the alpha
/// fixed-point iteration run until |z_{l+1} - z_l| <= rel_tol |x - z_{l+1}|.
/// Requires alpha L < 1 for non-quadratic tasks.
Vector prox_reference(const TaskLoss& task, const Vector& x, double alpha,
                      double rel_tol = 1e-15);

/// Default step budget 10 ceil(log(1/delta) / log(1/(gamma L))), at least 1.
int default_step_cap(double gamma, double L, double delta);

/// Runs fixed-point steps (stepsize gamma, default alpha) until the delta-oracle
/// condition |(x - z)/alpha - grad F(x)| <= delta |grad F(x)| is certified
/// against prox_reference(delta_ref). delta = 0 routes to the exact solver.
InnerResult prox_to_delta(const TaskLoss& task, const Vector& x, double alpha, double delta,
                          double delta_ref, std::optional<double> gamma = std::nullopt,
                          int step_cap = 0);

/// Dispatches on spec.kind. With measure = true the fixed-point result carries
/// its measured gradient error against the reference prox.
InnerResult inner_solve(const TaskLoss& task, const Vector& x, double alpha,
                        const InnerSolverSpec& spec, bool measure = false);

Vector envelope_grad(const TaskLoss& task, const Vector& x, double alpha,
                     const InnerSolverSpec& inner = InnerSolverSpec::exact());

double envelope_value(const TaskLoss& task, const Vector& x, double alpha,
                      const InnerSolverSpec& inner = InnerSolverSpec::exact());

/// y = z + alpha grad f(z); the exact prox of y is z.
Vector virtual_iterate(const TaskLoss& task, const Vector& z, double alpha);

}  // namespace moreau
