#include "moreau/envelope.hpp"
#include "moreau/rng.hpp"
#include "moreau/theory.hpp"

#include "support.hpp"

#include <cmath>

using namespace moreau;
using test_support::code_of;
using test_support::scalar_quadratic;
using test_support::vec;

namespace {

Vector random_vector(Rng& r, int d, double scale = 1.0) {
  Vector x(d);
  for (int j = 0; j < d; ++j) x[j] = scale * r.normal();
  return x;
}

}  // namespace

TEST_SUITE("envelope") {
  TEST_CASE("exact prox of z^2/2 at alpha = 1, x = 2 is 1") {
    const auto f = scalar_quadratic(1.0, 0.0);
    CHECK(prox_exact_quadratic(f, vec({2.0}), 1.0)[0] == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("prox of a minimizer is the minimizer") {
    const auto s = make_quadratic_suite(3, 4, 0.3, 2.0, 2.0, 17);
    for (double alpha : {0.01, 0.3, 5.0}) {
      for (const auto& t : s.tasks()) {
        const Vector& c = t.quadratic_model()->c;
        CHECK((prox_exact_quadratic(t, c, alpha) - c).norm() <= 1e-12 * (1 + c.norm()));
        CHECK((prox_fixed_point(t, c, alpha, 4) - c).norm() == 0.0);
        CHECK(envelope_grad(t, c, alpha).norm() <= 1e-12);
        CHECK(envelope_value(t, c, alpha) == doctest::Approx(t.value(c)));
      }
    }
  }

  TEST_CASE("exact prox satisfies stationarity on random 5-D quadratics") {
    const auto s = make_quadratic_suite(6, 5, 0.1, 3.0, 1.0, 23);
    Rng r(4);
    for (const auto& t : s.tasks()) {
      const Vector x = random_vector(r, 5, 3.0);
      const double alpha = 0.4;
      const Vector z = prox_exact_quadratic(t, x, alpha);
      const Vector residual = t.gradient(z) + (z - x) / alpha;
      CHECK(residual.norm() <= 1e-10 * (1 + x.norm()));
    }
  }

  TEST_CASE("one fixed-point step is the FO-MAML inner step") {
    const auto s = make_quadratic_suite(2, 3, 0.5, 1.0, 1.0, 5);
    Rng r(8);
    for (const auto& t : s.tasks()) {
      const Vector x = random_vector(r, 3);
      const double alpha = 0.3;
      const Vector expected = x - alpha * t.gradient(x);
      CHECK((prox_fixed_point(t, x, alpha, 1) - expected).norm() == 0.0);
    }
  }

  TEST_CASE("1-D fixed-point error is exactly (alpha L)^(s+1)") {
    const double L = 2.0, x = 1.0;
    const auto f = scalar_quadratic(L, 0.0);
    for (double alpha : {0.05, 0.25, 0.4}) {
      const double gradF = L * x / (1 + alpha * L);
      for (int s = 0; s <= 6; ++s) {
        const Vector z = prox_fixed_point(f, vec({x}), alpha, s);
        const double err = std::abs(f.gradient(z)[0] - gradF);
        CHECK(err == doctest::Approx(theory::inner_error_bound(alpha, L, s) * gradF).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("fixed-point error respects the bound on random quadratics") {
    const auto s = make_quadratic_suite(10, 4, 0.05, 1.0, 2.0, 31);
    Rng r(6);
    for (const auto& t : s.tasks()) {
      const Vector x = random_vector(r, 4, 2.0);
      for (double aL : {0.1, 0.5, 0.8}) {
        const Vector gF = envelope_grad(t, x, aL);
        for (int steps = 0; steps <= 5; ++steps) {
          const Vector z = prox_fixed_point(t, x, aL, steps);
          CHECK((t.gradient(z) - gF).norm() <=
                theory::inner_error_bound(aL, 1.0, steps) * gF.norm() + 1e-12);
        }
      }
    }
  }

  TEST_CASE("hand envelope values") {
    const auto f = scalar_quadratic(1.0, 0.0);
    CHECK(envelope_grad(f, vec({2.0}), 1.0)[0] == doctest::Approx(1.0));
    CHECK(envelope_value(f, vec({2.0}), 1.0) == doctest::Approx(1.0));
  }

  TEST_CASE("gradient identity (x - z)/alpha == grad f(z)") {
    const auto s = make_quadratic_suite(5, 5, 0.2, 4.0, 1.0, 2);
    const auto lg = make_logistic_suite(3, 5, 40, 0.05, 2);
    Rng r(13);
    for (const auto* suite : {&s, &lg}) {
      for (const auto& t : suite->tasks()) {
        const double alpha = 0.5 / t.smoothness();
        const Vector x = random_vector(r, 5, 2.0);
        const Vector z = prox_reference(t, x, alpha);
        CHECK(((x - z) / alpha - t.gradient(z)).norm() <= 1e-9);
      }
    }
  }

  TEST_CASE("envelope lies below the loss") {
    const auto s = make_logistic_suite(4, 3, 30, 0.01, 9);
    Rng r(21);
    for (int p = 0; p < 40; ++p) {
      const auto& t = s.task(p % 4);
      const Vector x = random_vector(r, 3, 2.0);
      CHECK(envelope_value(t, x, 0.5) <= t.value(x) + 1e-14);
    }
  }

  TEST_CASE("virtual iterate round trip") {
    const auto s = make_quadratic_suite(4, 3, 0.3, 2.0, 1.0, 14);
    Rng r(2);
    for (const auto& t : s.tasks()) {
      const double alpha = 0.3;
      const Vector z = random_vector(r, 3);
      const Vector y = virtual_iterate(t, z, alpha);
      CHECK((prox_exact_quadratic(t, y, alpha) - z).norm() <= 1e-9);
      CHECK((envelope_grad(t, y, alpha) - t.gradient(z)).norm() <= 1e-9);
      const Vector& c = t.quadratic_model()->c;
      CHECK(virtual_iterate(t, c, alpha) == c);
    }
  }

  TEST_CASE("delta = 0 is the exact prox") {
    const auto s = make_quadratic_suite(3, 3, 0.3, 2.0, 1.0, 15);
    Rng r(3);
    for (const auto& t : s.tasks()) {
      const Vector x = random_vector(r, 3);
      const auto res = prox_to_delta(t, x, 0.2, 0.0, 1e-12);
      CHECK((res.z - prox_exact_quadratic(t, x, 0.2)).norm() <= 1e-10);
      REQUIRE(res.certified_rel_err.has_value());
      CHECK(*res.certified_rel_err == 0.0);
    }
  }

  TEST_CASE("delta = alpha L is met after one step") {
    const auto s = make_quadratic_suite(6, 4, 0.1, 1.0, 1.0, 16);
    Rng r(12);
    for (const auto& t : s.tasks()) {
      const Vector x = random_vector(r, 4);
      const double alpha = 0.5;
      const auto res = prox_to_delta(t, x, alpha, alpha * 1.0, 1e-6);
      CHECK(res.steps <= 1);
      CHECK(*res.certified_rel_err <= alpha);
    }
  }

  TEST_CASE("delta = (alpha L)^s is met within s steps") {
    const auto s = make_quadratic_suite(8, 4, 0.1, 1.0, 1.0, 18);
    Rng r(19);
    const double alpha = 0.5;
    for (int steps = 1; steps <= 4; ++steps) {
      const double delta = theory::inner_error_bound(alpha, 1.0, steps - 1);
      for (const auto& t : s.tasks()) {
        const Vector x = random_vector(r, 4);
        const auto res = prox_to_delta(t, x, alpha, delta, delta / 1000);
        CHECK(res.steps <= steps);
        CHECK(*res.certified_rel_err <= delta);
        CHECK((res.y - virtual_iterate(t, res.z, alpha)).norm() == 0.0);
        // the outer-loop gradient is one order better than the certificate
        const Vector gF = envelope_grad(t, x, alpha);
        CHECK((res.g - gF).norm() <=
              theory::inner_error_bound(alpha, 1.0, res.steps) * gF.norm() + 1e-12);
      }
    }
  }

  TEST_CASE("prox_to_delta contract errors") {
    const auto f = scalar_quadratic(1.0, 0.0);
    const Vector x = vec({1.0});
    CHECK(code_of([&] { prox_to_delta(f, x, 0.5, -1.0, 1e-12); }) == ErrorCode::kInvalidConstants);
    CHECK(code_of([&] { prox_to_delta(f, x, 0.5, 0.1, 0.01); }) == ErrorCode::kInvalidConstants);
    CHECK(default_step_cap(0.5, 1.0, 0.01) == 10 * static_cast<int>(std::ceil(std::log(100.0) / std::log(2.0))));
    CHECK(default_step_cap(0.5, 1.0, 0.9) >= 1);
  }

  TEST_CASE("mismatched inner stepsize cannot certify below |alpha - gamma| L") {
    const auto s = make_quadratic_suite(4, 3, 0.05, 1.0, 2.0, 41);
    Rng r(5);
    const double alpha = 0.4, gamma = 0.2;
    for (const auto& t : s.tasks()) {
      const Vector x = random_vector(r, 3, 2.0);
      CHECK(code_of([&] { prox_to_delta(t, x, alpha, 0.5 * (alpha - gamma), 1e-6, gamma, 200); }) ==
            ErrorCode::kCertificationFailed);
    }
  }

  TEST_CASE("not-closed-form and dimension errors") {
    const auto lg = make_logistic_suite(1, 2, 10, 0.0, 1);
    CHECK(code_of([&] { prox_exact_quadratic(lg.task(0), Vector::Zero(2), 0.1); }) ==
          ErrorCode::kNotClosedForm);
    const auto f = scalar_quadratic(1.0, 0.0);
    CHECK(code_of([&] { prox_exact_quadratic(f, Vector::Zero(2), 0.1); }) ==
          ErrorCode::kDimensionMismatch);
  }

  TEST_CASE("fixed-point divergence is reported") {
    const auto f = scalar_quadratic(1.0, 0.0);
    std::vector<std::string> warnings;
    static std::vector<std::string>* sink_target = nullptr;
    sink_target = &warnings;
    set_warning_sink([](std::string_view m) { sink_target->emplace_back(m); });
    CHECK(code_of([&] { prox_fixed_point(f, vec({1.0}), 3.0, 200); }) == ErrorCode::kDivergence);
    set_warning_sink(nullptr);
    CHECK_FALSE(warnings.empty());
  }

  TEST_CASE("inner_solve dispatch") {
    const auto s = make_quadratic_suite(1, 3, 0.2, 1.0, 1.0, 6);
    const auto& t = s.task(0);
    const Vector x = vec({1.0, -2.0, 0.5});
    const auto ex = inner_solve(t, x, 0.3, InnerSolverSpec::exact());
    CHECK((ex.z - prox_exact_quadratic(t, x, 0.3)).norm() == 0.0);
    const auto fp = inner_solve(t, x, 0.3, InnerSolverSpec::fixed_point(3), true);
    CHECK((fp.z - prox_fixed_point(t, x, 0.3, 3)).norm() == 0.0);
    REQUIRE(fp.certified_rel_err.has_value());
    CHECK(*fp.certified_rel_err <= theory::inner_error_bound(0.3, 1.0, 3) + 1e-12);
    for (auto k : {InnerKind::kExact, InnerKind::kFixedPoint, InnerKind::kToDelta})
      CHECK(inner_kind_from_string(to_string(k)) == k);
  }

  TEST_CASE("central differences of the envelope match its gradient") {
    const auto lg = make_logistic_suite(2, 3, 30, 0.0, 44);
    Rng r(44);
    for (const auto& t : lg.tasks()) {
      const double alpha = 0.5 / t.smoothness();
      const Vector x = random_vector(r, 3);
      const Vector g = envelope_grad(t, x, alpha);
      for (int j = 0; j < 3; ++j) {
        Vector a = x, b = x;
        a[j] += 1e-5;
        b[j] -= 1e-5;
        const double fd = (envelope_value(t, a, alpha) - envelope_value(t, b, alpha)) / 2e-5;
        CHECK(std::abs(fd - g[j]) <= 1e-6);
      }
    }
  }
}
