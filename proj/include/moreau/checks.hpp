#pragma once

// Self-contained numerical verification routines. Each one builds its own
// seeded problems, prints nothing, and returns a verdict with evidence lines.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moreau::checks {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> lines;
  double seconds = 0.0;

  /// Records a sub-check; a false `ok` fails the whole result.
  void expect(bool ok, const std::string& what);
  void info(const std::string& what);
};

/// Inner fixed-point error (alpha L)^(s+1) over seeded quadratic tasks, plus
/// the 1-D equality case.
CheckResult lemma4();
/// Inner stepsize gamma != alpha: error bound, and certification failure
/// for delta below |alpha - gamma| L.
CheckResult remark_a1();
/// Envelope gradient identity, finite differences, smoothness and strong
/// monotonicity constants on random pairs.
CheckResult envelope();
/// FO-MAML distance bound on seeded strongly convex quadratic suites.
CheckResult thm41(int seeds = 100);
/// delta-oracle SGD distance bound, Monte Carlo over seeds.
CheckResult thm42(int seeds = 200);
/// Full-batch exact-prox distance bound on five quadratic suites.
CheckResult thm54();
/// Nonconvex gradient-norm bound for FO-MAML on a logistic suite.
CheckResult thm56(int seeds = 20);
/// Full-batch FO-MAML bias against the closed-form fixed point and its
/// alpha^2 scaling.
CheckResult bias();
/// Nonconvexity and nonsmoothness certificates of the 1-D landscapes.
CheckResult counterexample();
/// fo-muml(fixed-point, 1) == fo-maml and fo-muml(exact, tau = n) == full-gd, bitwise.
CheckResult reductions();

/// Names accepted by run_named, in presentation order.
std::vector<std::string_view> names();
std::optional<CheckResult> run_named(std::string_view name);

}  // namespace moreau::checks
