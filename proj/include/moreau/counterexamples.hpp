#pragma once

// One-dimensional landscape of phi(x) = f(z(x)), z(x) = x - alpha f'(z(x)),
// for convex smooth f: numerical certificates that phi can be nonconvex and
// nonsmooth.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace moreau::counterexamples {

using Real = long double;

struct ScalarFunction {
  std::string id;  // "piecewise-quartic" | "quadratic-cosine" | user label
  std::function<Real(Real)> value;
  std::function<Real(Real)> d1;
  std::function<Real(Real)> d2;
  std::function<Real(Real)> d3;
};

/// f(x) = x^4/4 - |x|^3/3 + x^2/6 for |x| <= 1, 2x^2/3 - |x| + 5/12 otherwise.
/// f'' = 3x^2 - 2|x| + 1/3 inside, 4/3 outside; f''' = 6x - 2 sgn(x) inside.
ScalarFunction piecewise_quartic();
/// f(x) = x^2/2 + cos x, f'' = 1 - cos x >= 0.
ScalarFunction quadratic_cosine();
ScalarFunction user_function(std::string label, std::function<Real(Real)> value,
                             std::function<Real(Real)> d1, std::function<Real(Real)> d2,
                             std::function<Real(Real)> d3);

/// Root of z + alpha f'(z) = x by safeguarded Newton/bisection, polished to
/// extended precision. Residual <= 1e-12 max(1, |x|).
Real imaml_inner_solve_ld(const ScalarFunction& f, Real x, Real alpha);
double imaml_inner_solve(const ScalarFunction& f, double x, double alpha);

/// phi(x) = f(z(x)) in extended precision.
Real phi_value(const ScalarFunction& f, Real x, Real alpha);

/// Chain rule: z' = 1/(1 + alpha f''), z'' = -alpha f''' z'^3,
/// phi' = f' z', phi'' = f'' z'^2 + f' z''.
struct PhiDerivatives {
  double z = 0.0;
  double dz = 0.0;
  double phi = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  /// Set when z(x) sits on a point where f''' jumps: phi'' from the other side.
  std::optional<double> phi2_other_side;
};

PhiDerivatives phi_derivatives(const ScalarFunction& f, double x, double alpha);

/// phi'' for the piecewise quartic through the full chain rule.
PhiDerivatives phi_second_piecewise(double alpha, double x);

/// The expression -2 alpha/(5 (1 + alpha/75)^3) + 1/(75 (1 + alpha/75)^2)
/// that results at z = 0.4 when the f'(z) factor multiplying z'' is dropped
/// from the chain rule. Negative exactly for alpha > 75/2249.
double phi_second_closed_form_at_witness(double alpha);

/// Second central difference of phi with step h, phi accumulated in long double.
double phi_second_fd(const ScalarFunction& f, double x, double alpha, double h = 1e-4);

/// z = 0.4 image: x0 = 0.4 + alpha f'(0.4).
double nonconvexity_witness_x0(double alpha);

enum class Verdict { kNonconvex, kNotCertified };

struct GridPoint {
  double x = 0.0;
  double z = 0.0;
  double phi = 0.0;
  double phi2_closed = 0.0;
  double phi2_fd = 0.0;
};

struct NonconvexityReport {
  double alpha = 0.0;
  // at the witness x0 (z = 0.4)
  double x0 = 0.0;
  double phi_x0 = 0.0;
  double dphi_x0 = 0.0;
  double phi2_closed_form = 0.0;
  double phi2_chain = 0.0;
  double phi2_fd = 0.0;
  bool closed_form_negative = false;  // closed-form expression < -1e-10
  bool x0_certified = false;        // chain rule and FD both < -1e-10 at x0
  // best witness found by scanning z in (1/3, 1)
  double witness_x = 0.0;
  double witness_z = 0.0;
  double witness_phi = 0.0;
  double witness_dphi = 0.0;
  double witness_phi2_chain = 0.0;
  double witness_phi2_fd = 0.0;
  bool witness_certified = false;  // chain rule and FD both < -1e-10 at the witness
  /// NONCONVEX iff the closed-form expression and the FD value at x0 are both < -1e-10.
  Verdict verdict = Verdict::kNotCertified;
  std::vector<GridPoint> grid;
};

NonconvexityReport verify_nonconvexity(double alpha, int grid_points = 201);

struct NonsmoothnessPoint {
  double z_target = 0.0;
  double x = 0.0;
  double phi = 0.0;
  double phi2_closed = 0.0;  // (1 + 2a - a z sin z - (1 + 2a) cos z) / (1 + a - a cos z)^3
  double phi2_fd = 0.0;
};

struct NonsmoothnessReport {
  double alpha = 0.0;
  std::vector<NonsmoothnessPoint> points;
  double max_abs_phi2 = 0.0;
  bool strictly_increasing = false;  // |phi''| along the targets, in the given order
};

double phi_second_quadratic_cosine(double alpha, double z);

NonsmoothnessReport verify_nonsmoothness(double alpha, const std::vector<double>& z_targets);

/// z_m = (2m + 1/2) pi for m = first..last.
std::vector<double> default_nonsmooth_targets(int first = 1, int last = 10);

std::string_view to_string(Verdict v);
void to_json(nlohmann::json& j, const NonconvexityReport& r);
void to_json(nlohmann::json& j, const NonsmoothnessReport& r);

}  // namespace moreau::counterexamples
