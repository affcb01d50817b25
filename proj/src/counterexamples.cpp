#include "moreau/counterexamples.hpp"

#include "moreau/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace moreau::counterexamples {

namespace {

constexpr Real kThird = 1.0L / 3.0L;

Real sgn(Real x) { return x > 0 ? 1.0L : (x < 0 ? -1.0L : 0.0L); }

bool on_kink(Real z) { return std::fabs(std::fabs(z) - 1.0L) <= 1e-12L; }

}  // namespace

ScalarFunction piecewise_quartic() {
  ScalarFunction f;
  f.id = "piecewise-quartic";
  f.value = [](Real x) {
    const Real a = std::fabs(x);
    if (a <= 1) return x * x * x * x / 4 - a * a * a / 3 + x * x / 6;
    return 2 * x * x / 3 - a + 5.0L / 12;
  };
  f.d1 = [](Real x) {
    const Real a = std::fabs(x);
    if (a <= 1) return sgn(x) * (a * a * a - a * a + a / 3);
    return sgn(x) * (4 * a / 3 - 1);
  };
  f.d2 = [](Real x) {
    const Real a = std::fabs(x);
    if (a <= 1) return 3 * a * a - 2 * a + kThird;
    return 4.0L / 3;
  };
  // inside-branch value on |x| = 1
  f.d3 = [](Real x) {
    const Real a = std::fabs(x);
    if (a <= 1) return sgn(x) * (6 * a - 2);
    return 0.0L;
  };
  return f;
}

ScalarFunction quadratic_cosine() {
  ScalarFunction f;
  f.id = "quadratic-cosine";
  f.value = [](Real x) { return x * x / 2 + std::cos(x); };
  f.d1 = [](Real x) { return x - std::sin(x); };
  f.d2 = [](Real x) { return 1 - std::cos(x); };
  f.d3 = [](Real x) { return std::sin(x); };
  return f;
}

ScalarFunction user_function(std::string label, std::function<Real(Real)> value,
                             std::function<Real(Real)> d1, std::function<Real(Real)> d2,
                             std::function<Real(Real)> d3) {
  return ScalarFunction{std::move(label), std::move(value), std::move(d1), std::move(d2),
                        std::move(d3)};
}

Real imaml_inner_solve_ld(const ScalarFunction& f, Real x, Real alpha) {
  if (!(alpha > 0)) throw Error(ErrorCode::kInvalidConstants, "alpha must be > 0");
  auto residual = [&](Real z) { return z + alpha * f.d1(z) - x; };

  Real width = 1 + std::fabs(x);
  Real lo = x - width;
  Real hi = x + width;
  int expansions = 0;
  while (!(residual(lo) <= 0 && residual(hi) >= 0)) {
    if (++expansions > 200) {
      std::ostringstream os;
      os << "no sign change of z + alpha f'(z) - x around x=" << static_cast<double>(x);
      throw Error(ErrorCode::kBracketFailure, os.str());
    }
    width *= 2;
    lo = x - width;
    hi = x + width;
  }

  const Real eps = std::numeric_limits<Real>::epsilon();
  Real z = std::clamp(x / (1 + alpha * f.d2(0)), lo, hi);
  for (int iter = 0; iter < 400; ++iter) {
    const Real r = residual(z);
    if (r == 0) break;
    if (r < 0) {
      lo = z;
    } else {
      hi = z;
    }
    const Real slope = 1 + alpha * f.d2(z);
    Real next = slope > 0 ? z - r / slope : (lo + hi) / 2;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    const Real step = std::fabs(next - z);
    z = next;
    if (step <= 2 * eps * std::max<Real>(1, std::fabs(z)) || hi - lo <= 2 * eps * std::max<Real>(1, std::fabs(z))) {
      break;
    }
  }
  if (!(std::fabs(residual(z)) <= 1e-12L * std::max<Real>(1, std::fabs(x)))) {
    throw Error(ErrorCode::kBracketFailure, "inner solve did not reach its residual tolerance");
  }
  return z;
}

double imaml_inner_solve(const ScalarFunction& f, double x, double alpha) {
  return static_cast<double>(imaml_inner_solve_ld(f, x, alpha));
}

Real phi_value(const ScalarFunction& f, Real x, Real alpha) {
  return f.value(imaml_inner_solve_ld(f, x, alpha));
}

namespace {

Real chain_second(Real alpha, Real d1, Real d2, Real d3) {
  const Real dz = 1 / (1 + alpha * d2);
  const Real d2z = -alpha * d3 * dz * dz * dz;
  return d2 * dz * dz + d1 * d2z;
}

}  // namespace

PhiDerivatives phi_derivatives(const ScalarFunction& f, double x, double alpha) {
  const Real a = alpha;
  const Real z = imaml_inner_solve_ld(f, x, a);
  const Real d1 = f.d1(z);
  const Real d2 = f.d2(z);
  PhiDerivatives out;
  out.z = static_cast<double>(z);
  out.dz = static_cast<double>(1 / (1 + a * d2));
  out.phi = static_cast<double>(f.value(z));
  out.phi1 = static_cast<double>(d1 / (1 + a * d2));
  out.phi2 = static_cast<double>(chain_second(a, d1, d2, f.d3(z)));
  return out;
}

PhiDerivatives phi_second_piecewise(double alpha, double x) {
  static const ScalarFunction f = piecewise_quartic();
  PhiDerivatives out = phi_derivatives(f, x, alpha);
  const Real z = out.z;
  if (on_kink(z)) {
    // inside branch f''' = 4 sgn(z), outside f''' = 0
    const Real s = z < 0 ? -1.0L : 1.0L;
    out.phi2 = static_cast<double>(chain_second(alpha, f.d1(s), f.d2(s), 4 * s));
    out.phi2_other_side = static_cast<double>(chain_second(alpha, f.d1(s), f.d2(s), 0.0L));
  }
  return out;
}

double phi_second_closed_form_at_witness(double alpha) {
  const double s = 1.0 + alpha / 75.0;
  return -2.0 * alpha / (5.0 * s * s * s) + 1.0 / (75.0 * s * s);
}

double phi_second_fd(const ScalarFunction& f, double x, double alpha, double h) {
  const Real a = alpha;
  const Real xl = x;
  const Real hl = h;
  const Real plus = phi_value(f, xl + hl, a);
  const Real mid = phi_value(f, xl, a);
  const Real minus = phi_value(f, xl - hl, a);
  return static_cast<double>((plus - 2 * mid + minus) / (hl * hl));
}

double nonconvexity_witness_x0(double alpha) {
  static const ScalarFunction f = piecewise_quartic();
  return static_cast<double>(0.4L + static_cast<Real>(alpha) * f.d1(0.4L));
}

NonconvexityReport verify_nonconvexity(double alpha, int grid_points) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConstants, "alpha must be > 0");
  static const ScalarFunction f = piecewise_quartic();
  constexpr double kNegative = -1e-10;
  const Real a = alpha;

  NonconvexityReport r;
  r.alpha = alpha;
  r.x0 = nonconvexity_witness_x0(alpha);
  const PhiDerivatives at_x0 = phi_derivatives(f, r.x0, alpha);
  r.phi_x0 = at_x0.phi;
  r.dphi_x0 = at_x0.phi1;
  r.phi2_closed_form = phi_second_closed_form_at_witness(alpha);
  r.phi2_chain = at_x0.phi2;
  r.phi2_fd = phi_second_fd(f, r.x0, alpha);
  r.closed_form_negative = r.phi2_closed_form < kNegative;
  r.x0_certified = r.phi2_chain < kNegative && r.phi2_fd < kNegative;

  // f'' vanishes at z = 1/3 while f''' and f' stay positive just above it, so
  // the chain-rule phi'' dips below zero on (1/3, 1/3 + O(alpha)). Scan
  // log-spaced offsets there for the most negative value.
  constexpr int kScan = 4000;
  const Real lo = std::log(1e-9L);
  const Real hi = std::log(2.0L / 3.0L);
  Real best_z = 0.4L;
  Real best = std::numeric_limits<Real>::infinity();
  for (int j = 0; j < kScan; ++j) {
    const Real offset = std::exp(lo + (hi - lo) * (j + 0.5L) / kScan);
    const Real z = kThird + offset;
    const Real value = chain_second(a, f.d1(z), f.d2(z), f.d3(z));
    if (value < best) {
      best = value;
      best_z = z;
    }
  }
  r.witness_z = static_cast<double>(best_z);
  r.witness_x = static_cast<double>(best_z + a * f.d1(best_z));
  const PhiDerivatives at_w = phi_derivatives(f, r.witness_x, alpha);
  r.witness_phi = at_w.phi;
  r.witness_dphi = at_w.phi1;
  r.witness_phi2_chain = at_w.phi2;
  // keep the stencil inside the dip
  const double offset = r.witness_z - static_cast<double>(kThird);
  r.witness_phi2_fd = phi_second_fd(f, r.witness_x, alpha, std::min(1e-4, offset / 4.0));

  r.witness_certified = r.witness_phi2_chain < kNegative && r.witness_phi2_fd < kNegative;
  r.verdict = (r.closed_form_negative && r.phi2_fd < kNegative) ? Verdict::kNonconvex
                                                                 : Verdict::kNotCertified;

  if (grid_points > 1) {
    r.grid.reserve(static_cast<std::size_t>(grid_points));
    for (int j = 0; j < grid_points; ++j) {
      const double x = -2.0 + 4.0 * j / (grid_points - 1);
      const PhiDerivatives d = phi_derivatives(f, x, alpha);
      r.grid.push_back({x, d.z, d.phi, d.phi2, phi_second_fd(f, x, alpha)});
    }
  }
  return r;
}

double phi_second_quadratic_cosine(double alpha, double z) {
  const double num =
      1.0 + 2.0 * alpha - alpha * z * std::sin(z) - (1.0 + 2.0 * alpha) * std::cos(z);
  const double den = 1.0 + alpha - alpha * std::cos(z);
  return num / (den * den * den);
}

NonsmoothnessReport verify_nonsmoothness(double alpha, const std::vector<double>& z_targets) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConstants, "alpha must be > 0");
  static const ScalarFunction f = quadratic_cosine();
  NonsmoothnessReport r;
  r.alpha = alpha;
  r.strictly_increasing = true;
  double previous = -1.0;
  for (double z : z_targets) {
    NonsmoothnessPoint p;
    p.z_target = z;
    p.x = static_cast<double>((1.0L + alpha) * z - alpha * std::sin(static_cast<Real>(z)));
    p.phi = static_cast<double>(phi_value(f, p.x, alpha));
    p.phi2_closed = phi_second_quadratic_cosine(alpha, z);
    p.phi2_fd = phi_second_fd(f, p.x, alpha);
    const double magnitude = std::abs(p.phi2_closed);
    r.max_abs_phi2 = std::max(r.max_abs_phi2, magnitude);
    if (!(magnitude > previous)) r.strictly_increasing = false;
    previous = magnitude;
    r.points.push_back(p);
  }
  return r;
}

std::vector<double> default_nonsmooth_targets(int first, int last) {
  std::vector<double> out;
  for (int m = first; m <= last; ++m) out.push_back((2.0 * m + 0.5) * std::numbers::pi);
  return out;
}

std::string_view to_string(Verdict v) {
  return v == Verdict::kNonconvex ? "NONCONVEX" : "NOT-CERTIFIED";
}

void to_json(nlohmann::json& j, const NonconvexityReport& r) {
  j = {{"kind", "nonconvex"},
       {"function", "piecewise-quartic"},
       {"alpha", r.alpha},
       {"verdict", to_string(r.verdict)},
       {"x0",
        {{"x", r.x0},
         {"z", 0.4},
         {"phi", r.phi_x0},
         {"dphi", r.dphi_x0},
         {"phi2_closed_form", r.phi2_closed_form},
         {"phi2_chain", r.phi2_chain},
         {"phi2_fd", r.phi2_fd},
         {"closed_form_negative", r.closed_form_negative},
         {"certified", r.x0_certified}}},
       {"witness",
        {{"x", r.witness_x},
         {"z", r.witness_z},
         {"phi", r.witness_phi},
         {"dphi", r.witness_dphi},
         {"phi2_chain", r.witness_phi2_chain},
         {"phi2_fd", r.witness_phi2_fd},
         {"certified", r.witness_certified}}}};
}

void to_json(nlohmann::json& j, const NonsmoothnessReport& r) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : r.points) {
    points.push_back({{"z", p.z_target},
                      {"x", p.x},
                      {"phi", p.phi},
                      {"phi2_closed", p.phi2_closed},
                      {"phi2_fd", p.phi2_fd}});
  }
  j = {{"kind", "nonsmooth"},
       {"function", "quadratic-cosine"},
       {"alpha", r.alpha},
       {"max_abs_phi2", r.max_abs_phi2},
       {"strictly_increasing", r.strictly_increasing},
       {"points", points}};
}

}  // namespace moreau::counterexamples
