#pragma once

#include "moreau/envelope.hpp"
#include "moreau/tasks.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace moreau {

enum class Method { kFoMaml, kFoMuml, kExactProxSgd, kFullGd };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

/// Outer-loop configuration. `inner` is ignored by fo-maml (one alpha step),
/// exact-prox-sgd and full-gd (both exact prox).
struct OuterSpec {
  Method method = Method::kFoMaml;
  double beta = 0.01;
  int tau = 1;
  int K = 100;
  std::uint64_t seed = 0;
  InnerSolverSpec inner = InnerSolverSpec::fixed_point(1);
  std::optional<Vector> x0;  // zero vector when unset

  void validate(int n) const;
  bool operator==(const OuterSpec& other) const;
};

struct RunOptions {
  std::optional<Vector> x_star;   // enables dist_sq
  int snapshot_stride = 0;        // 0: no x^k snapshots
  bool measure_objective = true;  // F(x^k) and |grad F(x^k)|^2 from the reference prox
  bool measure_inner_error = true;
  bool timing = true;             // false writes wall_ns = 0 (byte-stable output)
  bool parallel = true;           // OpenMP batch kernel vs serial reference
};

/// State after k outer iterations. mean_cert_err belongs to the batch used to
/// step from x^k to x^{k+1}, so it is NaN on the final record.
struct Record {
  long long k = 0;
  double dist_sq = 0.0;
  double F_val = 0.0;
  double grad_norm_sq = 0.0;
  double mean_cert_err = 0.0;
  std::int64_t wall_ns = 0;
  std::optional<Vector> x;
};

struct Trajectory {
  std::vector<Record> records;  // K + 1 entries
  Vector x_final;
};

Trajectory run_fo_maml(const TaskSuite& suite, const Vector& x0, double alpha, double beta,
                       int tau, int K, std::uint64_t seed, const RunOptions& options = {});

Trajectory run_fo_muml(const TaskSuite& suite, const Vector& x0, double alpha, double beta,
                       int tau, int K, const InnerSolverSpec& inner, std::uint64_t seed,
                       const RunOptions& options = {});

/// SGD on F with exact envelope gradients.
Trajectory run_exact_prox_sgd(const TaskSuite& suite, const Vector& x0, double alpha, double beta,
                              int tau, int K, std::uint64_t seed, const RunOptions& options = {});

/// x^{k+1} = x^k - beta grad F(x^k).
Trajectory run_full_gd(const TaskSuite& suite, const Vector& x0, double alpha, double beta, int K,
                       const RunOptions& options = {});

/// Dispatch on spec.method.
Trajectory run_outer(const TaskSuite& suite, double alpha, const OuterSpec& spec,
                     const RunOptions& options = {});

}  // namespace moreau
