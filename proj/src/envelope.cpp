#include "moreau/envelope.hpp"

#include "moreau/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace moreau {

std::string_view to_string(InnerKind kind) {
  switch (kind) {
    case InnerKind::kExact: return "exact";
    case InnerKind::kFixedPoint: return "fixed-point";
    case InnerKind::kToDelta: return "to-delta";
  }
  return "unknown";
}

InnerKind inner_kind_from_string(std::string_view name) {
  if (name == "exact" || name == "exact-closed-form") return InnerKind::kExact;
  if (name == "fixed-point") return InnerKind::kFixedPoint;
  if (name == "to-delta") return InnerKind::kToDelta;
  throw Error(ErrorCode::kInvalidConfig, "unknown inner solver kind '" + std::string(name) + "'");
}

InnerSolverSpec InnerSolverSpec::exact() {
  InnerSolverSpec spec;
  spec.kind = InnerKind::kExact;
  spec.steps = 0;
  return spec;
}

InnerSolverSpec InnerSolverSpec::fixed_point(int steps, std::optional<double> gamma) {
  InnerSolverSpec spec;
  spec.kind = InnerKind::kFixedPoint;
  spec.steps = steps;
  spec.gamma = gamma;
  return spec;
}

InnerSolverSpec InnerSolverSpec::to_delta(double delta, double delta_ref) {
  InnerSolverSpec spec;
  spec.kind = InnerKind::kToDelta;
  spec.steps = 0;
  spec.delta = delta;
  spec.delta_ref = delta_ref;
  return spec;
}

void InnerSolverSpec::validate() const {
  if (gamma && !(*gamma > 0.0)) throw Error(ErrorCode::kInvalidConfig, "inner gamma must be > 0");
  if (!(delta_ref > 0.0)) throw Error(ErrorCode::kInvalidConfig, "delta_ref must be > 0");
  switch (kind) {
    case InnerKind::kExact: break;
    case InnerKind::kFixedPoint:
      if (steps < 1) throw Error(ErrorCode::kInvalidConfig, "fixed-point inner needs s >= 1");
      break;
    case InnerKind::kToDelta:
      if (!(delta >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "delta must be >= 0");
      if (delta > 0.0 && delta_ref > delta / 100.0) {
        throw Error(ErrorCode::kInvalidConfig, "delta_ref must be <= delta / 100");
      }
      break;
  }
}

namespace {

constexpr double kDivergenceNorm = 1e12;

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidConstants, "alpha must be positive and finite");
  }
}

void check_divergence(const Vector& z, int step) {
  if (!(z.norm() <= kDivergenceNorm)) {
    std::ostringstream os;
    os << "inner fixed-point iterate norm exceeded 1e12 at step " << step;
    throw Error(ErrorCode::kDivergence, os.str());
  }
}

}  // namespace

Vector prox_exact_quadratic(const TaskLoss& task, const Vector& x, double alpha) {
  check_alpha(alpha);
  const QuadraticModel* q = task.quadratic_model();
  if (q == nullptr) throw Error(ErrorCode::kNotClosedForm, "task has no quadratic descriptor");
  if (x.size() != task.dimension()) throw Error(ErrorCode::kDimensionMismatch, "prox input length");
  const double inv_alpha = 1.0 / alpha;
  Matrix system = q->A;
  system.diagonal().array() += inv_alpha;
  const Vector rhs = q->A * q->c + inv_alpha * x;
  Eigen::LDLT<Matrix> ldlt(system);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::kSingularSystem, "prox system");
  return ldlt.solve(rhs);
}

Vector prox_fixed_point(const TaskLoss& task, const Vector& x, double alpha, int s,
                        std::optional<double> gamma) {
  check_alpha(alpha);
  if (s < 0) throw Error(ErrorCode::kInvalidCount, "step count must be >= 0");
  const double step = gamma.value_or(alpha);
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidConstants, "gamma must be > 0");
  if (step * task.smoothness() >= 1.0) {
    warn("fixed-point inner loop with gamma*L >= 1 need not converge");
  }
  Vector z = x;
  for (int l = 0; l < s; ++l) {
    z = x - step * task.gradient(z);
    check_divergence(z, l + 1);
  }
  return z;
}

Vector prox_reference(const TaskLoss& task, const Vector& x, double alpha, double rel_tol) {
  if (task.quadratic_model() != nullptr) return prox_exact_quadratic(task, x, alpha);
  check_alpha(alpha);
  if (alpha * task.smoothness() >= 1.0) {
    throw Error(ErrorCode::kRegimeViolation,
                "reference prox for non-quadratic tasks requires alpha * L < 1");
  }
  constexpr int kMaxSteps = 200000;
  const double eps = std::numeric_limits<double>::epsilon();
  Vector z = x;
  double previous_change = std::numeric_limits<double>::infinity();
  for (int l = 0; l < kMaxSteps; ++l) {
    Vector next = x - alpha * task.gradient(z);
    check_divergence(next, l + 1);
    const double change = (next - z).norm();
    const double scale = (x - next).norm();
    z = std::move(next);
    if (change <= rel_tol * scale) break;
    // rounding floor: the contraction has stalled at machine precision
    if (change <= 4.0 * eps * std::max(z.norm(), scale) && change >= previous_change) break;
    previous_change = change;
  }
  return z;
}

int default_step_cap(double gamma, double L, double delta) {
  const double rate = gamma * L;
  if (!(rate > 0.0) || rate >= 1.0) return 1000;
  if (delta >= 1.0) return 1;
  if (delta <= 0.0) return 1000;
  const double needed = std::ceil(std::log(1.0 / delta) / std::log(1.0 / rate));
  return std::max(1, 10 * static_cast<int>(needed));
}

namespace {

InnerResult finish(const TaskLoss& task, Vector z, double alpha, std::optional<double> err,
                   int steps) {
  InnerResult r;
  r.g = task.gradient(z);
  r.y = z + alpha * r.g;
  r.z = std::move(z);
  r.certified_rel_err = err;
  r.steps = steps;
  return r;
}

double relative(double err, double reference_norm) {
  if (reference_norm > 0.0) return err / reference_norm;
  return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

InnerResult prox_to_delta(const TaskLoss& task, const Vector& x, double alpha, double delta,
                          double delta_ref, std::optional<double> gamma, int step_cap) {
  check_alpha(alpha);
  if (!(delta >= 0.0)) throw Error(ErrorCode::kInvalidConstants, "delta must be >= 0");
  if (delta == 0.0) {
    if (task.quadratic_model() == nullptr) {
      throw Error(ErrorCode::kNotClosedForm,
                  "delta = 0 needs a closed-form prox; fixed-point steps cannot reach it");
    }
    return finish(task, prox_exact_quadratic(task, x, alpha), alpha, 0.0, 0);
  }
  if (!(delta_ref > 0.0) || delta_ref > delta / 100.0) {
    throw Error(ErrorCode::kInvalidConstants, "need 0 < delta_ref <= delta / 100");
  }
  const double step = gamma.value_or(alpha);
  const int cap = step_cap > 0 ? step_cap : default_step_cap(step, task.smoothness(), delta);

  const Vector reference_grad = (x - prox_reference(task, x, alpha, delta_ref)) / alpha;
  const double reference_norm = reference_grad.norm();

  Vector z = x;
  double ratio = relative(((x - z) / alpha - reference_grad).norm(), reference_norm);
  for (int l = 0; l <= cap; ++l) {
    if (ratio <= delta) return finish(task, std::move(z), alpha, ratio, l);
    if (l == cap) break;
    z = x - step * task.gradient(z);
    check_divergence(z, l + 1);
    ratio = relative(((x - z) / alpha - reference_grad).norm(), reference_norm);
  }
  std::ostringstream os;
  os << "could not certify delta=" << delta << " within " << cap << " steps (last ratio " << ratio
     << ")";
  throw Error(ErrorCode::kCertificationFailed, os.str());
}

InnerResult inner_solve(const TaskLoss& task, const Vector& x, double alpha,
                        const InnerSolverSpec& spec, bool measure) {
  switch (spec.kind) {
    case InnerKind::kExact:
      return finish(task, prox_reference(task, x, alpha), alpha, 0.0, 0);
    case InnerKind::kToDelta:
      return prox_to_delta(task, x, alpha, spec.delta, spec.delta_ref, spec.gamma, spec.step_cap);
    case InnerKind::kFixedPoint: {
      InnerResult r =
          finish(task, prox_fixed_point(task, x, alpha, spec.steps, spec.gamma), alpha, {},
                 spec.steps);
      if (measure) {
        const Vector reference_grad = (x - prox_reference(task, x, alpha)) / alpha;
        r.certified_rel_err = relative((r.g - reference_grad).norm(), reference_grad.norm());
      }
      return r;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown inner kind");
}

Vector envelope_grad(const TaskLoss& task, const Vector& x, double alpha,
                     const InnerSolverSpec& inner) {
  const InnerResult r = inner_solve(task, x, alpha, inner);
  return (x - r.z) / alpha;
}

double envelope_value(const TaskLoss& task, const Vector& x, double alpha,
                      const InnerSolverSpec& inner) {
  const InnerResult r = inner_solve(task, x, alpha, inner);
  return task.value(r.z) + (r.z - x).squaredNorm() / (2.0 * alpha);
}

Vector virtual_iterate(const TaskLoss& task, const Vector& z, double alpha) {
  return z + alpha * task.gradient(z);
}

}  // namespace moreau
