#include "moreau/counterexamples.hpp"

#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace moreau::counterexamples;

namespace {

constexpr double kThreshold = 75.0 / 2249.0;

ScalarFunction half_square() {
  return user_function(
      "half-square", [](Real z) { return z * z / 2; }, [](Real z) { return z; },
      [](Real) { return Real(1); }, [](Real) { return Real(0); });
}

}  // namespace

TEST_SUITE("counterexamples") {
  TEST_CASE("inner solve of z^2/2 is x/(1+alpha)") {
    const auto f = half_square();
    for (double a : {0.01, 0.5, 3.0})
      for (double x : {-2.0, 0.0, 0.7, 5.0})
        CHECK(imaml_inner_solve(f, x, a) == doctest::Approx(x / (1 + a)).epsilon(1e-14));
  }

  TEST_CASE("built-ins map 0 to 0") {
    for (double a : {0.1, 1.0}) {
      CHECK(imaml_inner_solve(piecewise_quartic(), 0.0, a) == 0.0);
      CHECK(imaml_inner_solve(quadratic_cosine(), 0.0, a) == 0.0);
    }
  }

  TEST_CASE("quadratic-cosine stationarity residual") {
    const auto f = quadratic_cosine();
    for (double a : {0.1, 1.0, 4.0}) {
      for (double x = -40; x <= 40; x += 3.7) {
        const Real z = imaml_inner_solve_ld(f, x, a);
        CHECK(std::abs(static_cast<double>((1 + a) * z - a * std::sin(z) - x)) <= 1e-12 * std::max(1.0, std::abs(x)));
      }
    }
  }

  TEST_CASE("piecewise quartic stays below 4/3 curvature and is C1") {
    const auto f = piecewise_quartic();
    for (double x = -3; x <= 3; x += 0.001) CHECK(static_cast<double>(f.d2(x)) <= 4.0 / 3.0 + 1e-15);
    for (double s : {-1.0, 1.0}) {
      const Real lo = s * (1 - 1e-12L), hi = s * (1 + 1e-12L);
      CHECK(std::abs(static_cast<double>(f.value(lo) - f.value(hi))) < 1e-11);
      CHECK(std::abs(static_cast<double>(f.d1(lo) - f.d1(hi))) < 1e-11);
    }
    CHECK(static_cast<double>(f.d1(0.4)) == doctest::Approx(0.0373333333333).epsilon(1e-10));
  }

  TEST_CASE("witness x0 and closed-form expression") {
    CHECK(nonconvexity_witness_x0(0.1) == doctest::Approx(0.4037333333).epsilon(1e-9));
    for (double a : {0.01, 0.1, 0.5, 2.0}) {
      const double s = 1 + a / 75;
      CHECK(phi_second_closed_form_at_witness(a) ==
            doctest::Approx(-2 * a / (5 * s * s * s) + 1 / (75 * s * s)));
      const auto d = phi_second_piecewise(a, nonconvexity_witness_x0(a));
      CHECK(d.z == doctest::Approx(0.4).epsilon(1e-13));
    }
    CHECK(phi_second_closed_form_at_witness(0.1) == doctest::Approx(-0.02654).epsilon(1e-3));
    CHECK(phi_second_closed_form_at_witness(0.01) > 0);
    CHECK(std::abs(phi_second_closed_form_at_witness(kThreshold)) <= 1e-6);
  }

  TEST_CASE("chain rule agrees with finite differences") {
    for (const auto& f : {piecewise_quartic(), quadratic_cosine()}) {
      for (double a : {0.05, 0.3, 1.0}) {
        for (double x = -2.3; x <= 2.3; x += 0.17) {
          const auto d = phi_derivatives(f, x, a);
          if (std::abs(std::abs(d.z) - 1) < 1e-3 || std::abs(d.z) < 1e-3) continue;
          const double fd = phi_second_fd(f, x, a);
          CHECK(std::abs(d.phi2 - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }

  TEST_CASE("kink reports both one-sided values") {
    const double a = 0.3;
    const auto d = phi_second_piecewise(a, 1.0 + a / 3.0);
    CHECK(d.z == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(d.phi2_other_side.has_value());
    CHECK(*d.phi2_other_side != doctest::Approx(d.phi2));
    CHECK_FALSE(phi_second_piecewise(a, 0.5).phi2_other_side.has_value());
  }

  TEST_CASE("verdict below the threshold") {
    CHECK(verify_nonconvexity(0.02).verdict == Verdict::kNotCertified);
    CHECK(verify_nonconvexity(0.01).verdict == Verdict::kNotCertified);
  }

  TEST_CASE("closed form at x0 is negative above the threshold") {
    for (double a : {0.05, 0.1, 1.0}) {
      const auto r = verify_nonconvexity(a, 11);
      CHECK(r.closed_form_negative);
      CHECK(r.phi2_closed_form == doctest::Approx(phi_second_closed_form_at_witness(a)));
    }
  }

  TEST_CASE("phi is nonconvex just above z = 1/3 for every alpha tested") {
    for (double a : {0.01, 0.05, 0.1, 1.0}) {
      const auto r = verify_nonconvexity(a, 11);
      CHECK(r.witness_certified);
      CHECK(r.witness_phi2_chain < 0);
      CHECK(r.witness_phi2_fd < 0);
      CHECK(r.witness_z > 1.0 / 3.0);
      CHECK(r.witness_z < 0.4);
    }
  }

  // Stated expectation: alpha = 0.1 is certified at x0. Finite differences of
  // phi give phi''(x0) = +0.0118 there, so the verdict stays NOT-CERTIFIED.
  TEST_CASE("alpha = 0.1 certified nonconvex at x0" * doctest::should_fail()) {
    const auto r = verify_nonconvexity(0.1, 11);
    CHECK(r.verdict == Verdict::kNonconvex);
    CHECK(r.phi2_fd < 0);
  }

  TEST_CASE("true phi'' at x0 changes sign near alpha = 0.9036") {
    CHECK(verify_nonconvexity(0.89, 3).phi2_fd > 0);
    const auto above = verify_nonconvexity(0.92, 3);
    CHECK(above.phi2_fd < 0);
    CHECK(above.verdict == Verdict::kNonconvex);
  }

  TEST_CASE("nonsmooth closed form by hand") {
    const double pi = std::numbers::pi;
    CHECK(phi_second_quadratic_cosine(1.0, pi / 2) == doctest::Approx((3 - pi / 2) / 8).epsilon(1e-12));
    CHECK(phi_second_quadratic_cosine(1.0, pi / 2) == doctest::Approx(0.17854).epsilon(1e-4));
    CHECK(std::abs(phi_second_quadratic_cosine(1.0, 100.5 * pi)) >
          10 * std::abs(phi_second_quadratic_cosine(1.0, pi / 2)));
    for (double z : {0.3, 1.7, 4.0})
      CHECK(phi_second_quadratic_cosine(1e-9, z) == doctest::Approx(1 - std::cos(z)).epsilon(1e-6));
  }

  TEST_CASE("nonsmoothness report") {
    const auto targets = default_nonsmooth_targets();
    REQUIRE(targets.size() == 10);
    CHECK(targets.front() == doctest::Approx(2.5 * std::numbers::pi));
    const auto r = verify_nonsmoothness(1.0, targets);
    CHECK(r.strictly_increasing);
    double mx = 0;
    for (const auto& p : r.points) {
      CHECK(p.phi2_fd == doctest::Approx(p.phi2_closed).epsilon(1e-6));
      CHECK(p.x == doctest::Approx(2 * p.z_target - std::sin(p.z_target)));
      mx = std::max(mx, std::abs(p.phi2_closed));
    }
    CHECK(r.max_abs_phi2 == mx);
    auto rev = targets;
    std::reverse(rev.begin(), rev.end());
    CHECK_FALSE(verify_nonsmoothness(1.0, rev).strictly_increasing);
  }

  TEST_CASE("reports serialize") {
    const nlohmann::json j = verify_nonconvexity(0.1, 5);
    CHECK(j.contains("verdict"));
    CHECK(j["alpha"] == 0.1);
    const nlohmann::json k = verify_nonsmoothness(1.0, default_nonsmooth_targets(1, 3));
    CHECK(k["points"].size() == 3);
  }
}
