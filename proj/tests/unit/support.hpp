#pragma once

#include "moreau/error.hpp"
#include "moreau/tasks.hpp"

#include <doctest.h>

#include <initializer_list>

namespace test_support {

template <class Fn>
moreau::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const moreau::Error& e) {
    return e.code();
  }
  FAIL("expected moreau::Error");
  return moreau::ErrorCode::kIo;
}

inline moreau::Vector vec(std::initializer_list<double> v) {
  moreau::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// f(z) = a/2 (z - c)^2 in one dimension.
inline moreau::TaskLoss scalar_quadratic(double a, double c) {
  moreau::Matrix A(1, 1);
  A << a;
  return moreau::TaskLoss::quadratic(A, vec({c}), a, a);
}

/// Two-task suite {x^2/2, (x - 3)^2}.
inline moreau::TaskSuite biased_pair() {
  moreau::SuiteDescriptor d;
  d.n = 2;
  d.d = 1;
  d.mu = 1.0;
  d.L = 2.0;
  return moreau::TaskSuite(d, {scalar_quadratic(1.0, 0.0), scalar_quadratic(2.0, 3.0)});
}

}  // namespace test_support
