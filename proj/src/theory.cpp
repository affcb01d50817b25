#include "moreau/theory.hpp"

#include "moreau/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace moreau::theory {

namespace {

// a <= b up to 1e-12 relative rounding, so boundary choices typed into a
// config file still count as satisfying the hypothesis
bool le(double a, double b) { return a <= b + 1e-12 * std::abs(b); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

EnvelopeConstants envelope_constants(double L, double mu, double alpha, Convexity cls) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConstants, "alpha must be > 0");
  if (!(L > 0.0)) throw Error(ErrorCode::kInvalidConstants, "L must be > 0");
  EnvelopeConstants c;
  switch (cls) {
    case Convexity::kNonconvex:
      if (alpha * L >= 1.0) {
        throw Error(ErrorCode::kRegimeViolation, "nonconvex envelope needs alpha * L < 1");
      }
      c.L_F = L / (1.0 - alpha * L);
      c.mu_F = 0.0;
      c.fallback_L = std::numeric_limits<double>::infinity();
      break;
    case Convexity::kConvex:
      c.L_F = L / (1.0 + alpha * L);
      c.mu_F = 0.0;
      c.fallback_L = 1.0 / alpha;
      break;
    case Convexity::kStronglyConvex:
      if (!(mu > 0.0)) throw Error(ErrorCode::kInvalidConstants, "strongly convex needs mu > 0");
      c.L_F = L / (1.0 + alpha * L);
      c.mu_F = mu / (1.0 + alpha * mu);
      c.fallback_L = 1.0 / alpha;
      break;
  }
  return c;
}

double inner_error_bound(double alpha, double L, int s) {
  return std::pow(alpha * L, static_cast<double>(s + 1));
}

double mismatched_step_bound(double alpha, double gamma, double L, int s) {
  return std::pow(gamma * L, static_cast<double>(s)) + std::abs(alpha - gamma) * L;
}

double RateBound::at(long long k, double initial_dist_sq) const {
  return std::pow(factor, static_cast<double>(k)) * initial_dist_sq + radius;
}

RateBound rate_thm41(double L, double mu, double alpha, double beta, double tau,
                     double sigma_star_sq) {
  RateBound r;
  r.check = "thm41";
  const double kappa = L / mu;
  r.precondition = "beta <= 1/(20L) = " + fmt(1.0 / (20.0 * L)) +
                   ", alpha <= 1/(4 sqrt(kappa) L) = " + fmt(1.0 / (4.0 * std::sqrt(kappa) * L));
  r.precondition_ok = mu > 0.0 && le(beta, 1.0 / (20.0 * L)) &&
                      le(alpha, 1.0 / (4.0 * std::sqrt(kappa) * L));
  r.factor = 1.0 - beta * mu / 4.0;
  r.radius = 16.0 / mu * (2.0 * alpha * alpha * L * L / mu + beta / tau + beta) * sigma_star_sq;
  return r;
}

RateBound rate_thm42(double L, double mu, double alpha, double beta, double tau, double delta,
                     double sigma_star_sq) {
  RateBound r;
  r.check = "thm42";
  const double kappa = L / mu;
  r.precondition = "alpha <= 1/L = " + fmt(1.0 / L) + ", beta <= 1/(20L) = " +
                   fmt(1.0 / (20.0 * L)) + ", delta <= 1/(4 sqrt(kappa)) = " +
                   fmt(1.0 / (4.0 * std::sqrt(kappa)));
  r.precondition_ok = mu > 0.0 && le(alpha, 1.0 / L) && le(beta, 1.0 / (20.0 * L)) &&
                      le(delta, 1.0 / (4.0 * std::sqrt(kappa)));
  r.factor = 1.0 - beta * mu / 4.0;
  const double d2 = delta * delta;
  r.radius = 16.0 / mu * (2.0 * d2 / mu + beta / tau + beta * d2) * sigma_star_sq;
  return r;
}

RateBound rate_thm54(double L, double mu, double alpha, double beta, double tau, double delta,
                     double sigma_star_sq) {
  RateBound r;
  r.check = "thm54";
  r.precondition = "alpha <= 1/(sqrt(6) L) = " + fmt(1.0 / (std::sqrt(6.0) * L)) +
                   ", beta <= tau/(4L) = " + fmt(tau / (4.0 * L));
  r.precondition_ok =
      mu > 0.0 && le(alpha, 1.0 / (std::sqrt(6.0) * L)) && le(beta, tau / (4.0 * L));
  r.factor = 1.0 - beta * mu / 12.0;
  r.radius = 6.0 * (beta / tau + 3.0 * delta * delta * alpha * alpha * L) * sigma_star_sq / mu;
  return r;
}

NonconvexBound rate_thm56(double L, double alpha, double beta, double tau, double delta,
                          double sigma_sq, double F0_minus_Fstar, long long k) {
  if (k < 1) throw Error(ErrorCode::kInvalidCount, "rate_thm56 needs k >= 1");
  NonconvexBound r;
  r.check = "thm56";
  r.precondition = "alpha <= 1/(4L) = " + fmt(1.0 / (4.0 * L)) + ", beta <= 1/(16L) = " +
                   fmt(1.0 / (16.0 * L));
  r.precondition_ok = le(alpha, 1.0 / (4.0 * L)) && le(beta, 1.0 / (16.0 * L));
  const double aL2 = (alpha * L) * (alpha * L);
  const double d2 = delta * delta;
  r.decay = 4.0 / (beta * static_cast<double>(k)) * F0_minus_Fstar;
  r.floor = 4.0 * aL2 * d2 * sigma_sq + 32.0 * beta * aL2 * (1.0 / tau + aL2 * d2) * sigma_sq;
  r.bound = r.decay + r.floor;
  return r;
}

TheoryReport make_report(const ReportInputs& in) {
  TheoryReport report;
  report.inputs = in;
  report.delta_pred = in.delta;
  try {
    report.envelope = envelope_constants(in.L, in.mu, in.alpha, in.convexity);
  } catch (const Error&) {
    report.envelope.reset();
  }
  const bool strongly = in.convexity == Convexity::kStronglyConvex && in.mu > 0.0;
  if (strongly) report.kappa = in.L / in.mu;
  if (strongly && in.sigma_star_sq) {
    const double s2 = *in.sigma_star_sq;
    report.rates.push_back(rate_thm41(in.L, in.mu, in.alpha, in.beta, in.tau, s2));
    report.rates.push_back(rate_thm42(in.L, in.mu, in.alpha, in.beta, in.tau, in.delta, s2));
    report.rates.push_back(rate_thm54(in.L, in.mu, in.alpha, in.beta, in.tau, in.delta, s2));
  }
  if (in.sigma_sq && in.F0_minus_Fstar) {
    report.nonconvex = rate_thm56(in.L, in.alpha, in.beta, in.tau, in.delta, *in.sigma_sq,
                                  *in.F0_minus_Fstar, std::max(1LL, in.k));
  }
  return report;
}

std::string_view to_string(Units u) {
  return u == Units::kSquaredDistance ? "squared-distance" : "squared-gradient-norm";
}

void to_json(nlohmann::json& j, const EnvelopeConstants& c) {
  j = {{"L_F", c.L_F}, {"mu_F", c.mu_F}};
  if (std::isfinite(c.fallback_L)) j["fallback_L"] = c.fallback_L;
}

void to_json(nlohmann::json& j, const RateBound& r) {
  j = {{"check", r.check},         {"precondition", r.precondition},
       {"precondition_ok", r.precondition_ok}, {"factor", r.factor},
       {"radius", r.radius},           {"units", to_string(r.units)}};
}

void to_json(nlohmann::json& j, const NonconvexBound& r) {
  j = {{"check", r.check}, {"precondition", r.precondition},
       {"precondition_ok", r.precondition_ok}, {"decay", r.decay},
       {"floor", r.floor}, {"bound", r.bound}, {"units", to_string(r.units)}};
}

void to_json(nlohmann::json& j, const TheoryReport& r) {
  const auto& in = r.inputs;
  j = nlohmann::json::object();
  j["inputs"] = {{"L", in.L},         {"mu", in.mu},       {"convexity", to_string(in.convexity)},
                 {"alpha", in.alpha}, {"beta", in.beta},   {"tau", in.tau},
                 {"delta", in.delta}, {"k", in.k}};
  if (in.sigma_star_sq) j["inputs"]["sigma_star_sq"] = *in.sigma_star_sq;
  if (in.sigma_sq) j["inputs"]["sigma_sq"] = *in.sigma_sq;
  if (in.F0_minus_Fstar) j["inputs"]["F0_minus_Fstar"] = *in.F0_minus_Fstar;
  j["envelope"] = r.envelope ? nlohmann::json(*r.envelope) : nlohmann::json(nullptr);
  j["kappa"] = r.kappa ? nlohmann::json(*r.kappa) : nlohmann::json(nullptr);
  j["delta_pred"] = r.delta_pred;
  j["rates"] = r.rates;
  j["nonconvex"] = r.nonconvex ? nlohmann::json(*r.nonconvex) : nlohmann::json(nullptr);
}

}  // namespace moreau::theory
