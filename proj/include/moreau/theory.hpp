#pragma once

#include "moreau/tasks.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace moreau::theory {

/// Smoothness / strong convexity of a single envelope F_i given f_i's constants.
struct EnvelopeConstants {
  double L_F = 0.0;
  double mu_F = 0.0;
  /// 1/alpha, valid for any convex f_i (smooth or not); +inf when nonconvex.
  double fallback_L = 0.0;
};

/// nonconvex (needs alpha L < 1): (L/(1 - alpha L), 0)
/// convex:                        (L/(1 + alpha L), 0)
/// strongly convex:               (L/(1 + alpha L), mu/(1 + alpha mu))
EnvelopeConstants envelope_constants(double L, double mu, double alpha, Convexity cls);

/// (alpha L)^(s+1): relative error of grad f(z_s) after s inner steps.
double inner_error_bound(double alpha, double L, int s);

/// (gamma L)^s + |alpha - gamma| L: inner steps with a stepsize gamma != alpha.
double mismatched_step_bound(double alpha, double gamma, double L, int s);

enum class Units { kSquaredDistance, kSquaredGradientNorm };

/// E|x^k - x*|^2 <= factor^k |x^0 - x*|^2 + radius.
struct RateBound {
  std::string check;
  std::string precondition;  // human-readable hypotheses
  bool precondition_ok = false;
  double factor = 1.0;
  double radius = 0.0;
  Units units = Units::kSquaredDistance;

  double at(long long k, double initial_dist_sq) const;
};

/// min_{t<=k} E|grad F(x^t)|^2 <= decay + floor.
struct NonconvexBound {
  std::string check;
  std::string precondition;
  bool precondition_ok = false;
  double decay = 0.0;  // 4 (F(x^0) - F*) / (beta k)
  double floor = 0.0;  // the k-independent terms
  double bound = 0.0;
  Units units = Units::kSquaredGradientNorm;
};

/// Inexact SGD view of FO-MAML (inner error alpha L).
RateBound rate_thm41(double L, double mu, double alpha, double beta, double tau,
                     double sigma_star_sq);
/// Inexact SGD view of a delta-oracle method.
RateBound rate_thm42(double L, double mu, double alpha, double beta, double tau, double delta,
                     double sigma_star_sq);
/// Virtual-iterate analysis, strongly convex.
RateBound rate_thm54(double L, double mu, double alpha, double beta, double tau, double delta,
                     double sigma_star_sq);
/// Virtual-iterate analysis, nonconvex under uniformly bounded variance sigma_sq.
NonconvexBound rate_thm56(double L, double alpha, double beta, double tau, double delta,
                          double sigma_sq, double F0_minus_Fstar, long long k);

/// Inputs for a full report. Optional quantities leave the matching entries out.
struct ReportInputs {
  double L = 1.0;
  double mu = 0.0;
  Convexity convexity = Convexity::kStronglyConvex;
  double alpha = 0.1;
  double beta = 0.01;
  double tau = 1.0;
  double delta = 0.0;  // inner-oracle accuracy of the configured method
  std::optional<double> sigma_star_sq;
  std::optional<double> sigma_sq;
  std::optional<double> F0_minus_Fstar;
  long long k = 1;
};

struct TheoryReport {
  ReportInputs inputs;
  std::optional<EnvelopeConstants> envelope;  // empty on regime violation
  std::optional<double> kappa;                // empty when mu = 0
  double delta_pred = 0.0;
  std::vector<RateBound> rates;
  std::optional<NonconvexBound> nonconvex;
};

TheoryReport make_report(const ReportInputs& in);

std::string_view to_string(Units u);
void to_json(nlohmann::json& j, const EnvelopeConstants& c);
void to_json(nlohmann::json& j, const RateBound& r);
void to_json(nlohmann::json& j, const NonconvexBound& r);
void to_json(nlohmann::json& j, const TheoryReport& r);

}  // namespace moreau::theory
