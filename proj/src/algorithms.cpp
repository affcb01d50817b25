#include "moreau/algorithms.hpp"

#include "moreau/error.hpp"
#include "moreau/kernels.hpp"
#include "moreau/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace moreau {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kFoMaml: return "fo-maml";
    case Method::kFoMuml: return "fo-muml";
    case Method::kExactProxSgd: return "exact-prox-sgd";
    case Method::kFullGd: return "full-gd";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "fo-maml") return Method::kFoMaml;
  if (name == "fo-muml") return Method::kFoMuml;
  if (name == "exact-prox-sgd") return Method::kExactProxSgd;
  if (name == "full-gd") return Method::kFullGd;
  throw Error(ErrorCode::kInvalidConfig, "unknown method '" + std::string(name) + "'");
}

void OuterSpec::validate(int n) const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::kInvalidConfig, "beta must be finite and >= 0");
  }
  if (tau < 1 || tau > n) throw Error(ErrorCode::kInvalidConfig, "need 1 <= tau <= n");
  if (K < 0) throw Error(ErrorCode::kInvalidConfig, "K must be >= 0");
  if (method == Method::kFoMuml) inner.validate();
}

bool OuterSpec::operator==(const OuterSpec& other) const {
  const bool same_x0 = x0.has_value() == other.x0.has_value() &&
                       (!x0 || (x0->size() == other.x0->size() && *x0 == *other.x0));
  return method == other.method && beta == other.beta && tau == other.tau && K == other.K &&
         seed == other.seed && inner == other.inner && same_x0;
}

namespace {

constexpr double kDivergenceNorm = 1e12;

using Clock = std::chrono::steady_clock;

struct Loop {
  const TaskSuite& suite;
  double alpha;
  double beta;
  int K;
  const RunOptions& options;
  kernels::InnerStep step;
};

// Shared outer loop: x^{k+1} = x^k - beta * mean_{i in T_k} g_i, with the
// batch produced by `next_batch` and g_i by `loop.step`.
template <class NextBatch>
Trajectory outer_loop(const Loop& loop, const Vector& x0, NextBatch&& next_batch) {
  const TaskSuite& suite = loop.suite;
  if (x0.size() != suite.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 length does not match suite dimension");
  }
  if (!(loop.alpha > 0.0)) throw Error(ErrorCode::kInvalidConstants, "alpha must be > 0");
  if (loop.options.x_star && loop.options.x_star->size() != x0.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "x_star length does not match suite dimension");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto start = Clock::now();

  Trajectory traj;
  traj.records.reserve(static_cast<std::size_t>(loop.K) + 1);
  Vector x = x0;
  for (long long k = 0;; ++k) {
    if (!(x.norm() <= kDivergenceNorm)) {
      std::ostringstream os;
      os << "outer iterate norm exceeded 1e12 at k=" << k;
      throw Error(ErrorCode::kDivergence, os.str());
    }
    Record rec;
    rec.k = k;
    rec.dist_sq = loop.options.x_star ? (x - *loop.options.x_star).squaredNorm() : nan;
    if (loop.options.measure_objective) {
      const auto eval = loop.options.parallel ? kernels::envelope_eval(suite, x, loop.alpha)
                                              : kernels::envelope_eval_serial(suite, x, loop.alpha);
      rec.F_val = eval.value;
      rec.grad_norm_sq = eval.gradient.squaredNorm();
    } else {
      rec.F_val = nan;
      rec.grad_norm_sq = nan;
    }
    rec.mean_cert_err = nan;
    if (loop.options.snapshot_stride > 0 && k % loop.options.snapshot_stride == 0) rec.x = x;
    traj.records.push_back(std::move(rec));
    if (k == loop.K) break;

    const std::vector<int> batch = next_batch();
    const auto g = loop.options.parallel ? kernels::batch_gradient(suite, batch, x, loop.step)
                                         : kernels::batch_gradient_serial(suite, batch, x, loop.step);
    traj.records.back().mean_cert_err = g.mean_cert_err;
    x = x - loop.beta * g.mean;
    if (loop.options.timing) {
      traj.records.back().wall_ns =
          std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
    }
  }
  if (loop.options.timing) {
    traj.records.back().wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  }
  traj.x_final = x;
  return traj;
}

auto sampler(int n, int tau, std::uint64_t seed) {
  if (tau < 1 || tau > n) throw Error(ErrorCode::kInvalidCount, "need 1 <= tau <= n");
  return [rng = Rng::stream(seed, 0), n, tau]() mutable {
    return rng.sample_without_replacement(n, tau);
  };
}

auto full_batch(int n) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  return [all]() { return all; };
}

double measured_error(const TaskLoss& task, const Vector& x, double alpha, const Vector& g) {
  const Vector reference = (x - prox_reference(task, x, alpha)) / alpha;
  const double norm = reference.norm();
  const double err = (g - reference).norm();
  if (norm > 0.0) return err / norm;
  return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

Trajectory run_fo_maml(const TaskSuite& suite, const Vector& x0, double alpha, double beta,
                       int tau, int K, std::uint64_t seed, const RunOptions& options) {
  if (alpha * suite.smoothness() >= 1.0) warn("fo-maml with alpha * L >= 1");
  const bool measure = options.measure_inner_error;
  Loop loop{suite, alpha, beta, K, options,
            [alpha, measure](const TaskLoss& task, const Vector& x) {
              InnerResult r;
              r.z = x - alpha * task.gradient(x);
              r.g = task.gradient(r.z);
              r.y = r.z + alpha * r.g;
              r.steps = 1;
              if (measure) r.certified_rel_err = measured_error(task, x, alpha, r.g);
              return r;
            }};
  return outer_loop(loop, x0, sampler(suite.size(), tau, seed));
}

Trajectory run_fo_muml(const TaskSuite& suite, const Vector& x0, double alpha, double beta,
                       int tau, int K, const InnerSolverSpec& inner, std::uint64_t seed,
                       const RunOptions& options) {
  inner.validate();
  const bool measure = options.measure_inner_error;
  Loop loop{suite, alpha, beta, K, options,
            [alpha, inner, measure](const TaskLoss& task, const Vector& x) {
              return inner_solve(task, x, alpha, inner, measure);
            }};
  return outer_loop(loop, x0, sampler(suite.size(), tau, seed));
}

Trajectory run_exact_prox_sgd(const TaskSuite& suite, const Vector& x0, double alpha, double beta,
                              int tau, int K, std::uint64_t seed, const RunOptions& options) {
  return run_fo_muml(suite, x0, alpha, beta, tau, K, InnerSolverSpec::exact(), seed, options);
}

Trajectory run_full_gd(const TaskSuite& suite, const Vector& x0, double alpha, double beta, int K,
                       const RunOptions& options) {
  Loop loop{suite, alpha, beta, K, options, [alpha](const TaskLoss& task, const Vector& x) {
              return inner_solve(task, x, alpha, InnerSolverSpec::exact());
            }};
  return outer_loop(loop, x0, full_batch(suite.size()));
}

Trajectory run_outer(const TaskSuite& suite, double alpha, const OuterSpec& spec,
                     const RunOptions& options) {
  spec.validate(suite.size());
  const Vector x0 = spec.x0.value_or(Vector::Zero(suite.dimension()));
  switch (spec.method) {
    case Method::kFoMaml:
      return run_fo_maml(suite, x0, alpha, spec.beta, spec.tau, spec.K, spec.seed, options);
    case Method::kFoMuml:
      return run_fo_muml(suite, x0, alpha, spec.beta, spec.tau, spec.K, spec.inner, spec.seed,
                         options);
    case Method::kExactProxSgd:
      return run_exact_prox_sgd(suite, x0, alpha, spec.beta, spec.tau, spec.K, spec.seed, options);
    case Method::kFullGd:
      return run_full_gd(suite, x0, alpha, spec.beta, spec.K, options);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown method");
}

}  // namespace moreau
