#include "moreau/kernels.hpp"

#include <cmath>
#include <limits>

namespace moreau::kernels {

namespace {

BatchGradient reduce(const std::vector<InnerResult>& slots, Eigen::Index d) {
  BatchGradient out;
  out.mean = Vector::Zero(d);
  double err_sum = 0.0;
  bool certified = true;
  for (const auto& r : slots) {
    out.mean += r.g;
    if (r.certified_rel_err) {
      err_sum += *r.certified_rel_err;
    } else {
      certified = false;
    }
  }
  const double inv = 1.0 / static_cast<double>(slots.size());
  out.mean *= inv;
  out.mean_cert_err = certified ? err_sum * inv : std::numeric_limits<double>::quiet_NaN();
  return out;
}

EnvelopeEval reduce(std::vector<double> values, std::vector<Vector> grads, Eigen::Index d) {
  EnvelopeEval out;
  out.gradient = Vector::Zero(d);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    out.value += values[i];
    out.gradient += grads[i];
  }
  const double inv = 1.0 / static_cast<double>(grads.size());
  out.value *= inv;
  out.gradient *= inv;
  out.task_gradients = std::move(grads);
  return out;
}

void one_envelope(const TaskLoss& task, const Vector& x, double alpha, double& value,
                  Vector& grad) {
  const Vector z = prox_reference(task, x, alpha);
  value = task.value(z) + (z - x).squaredNorm() / (2.0 * alpha);
  grad = (x - z) / alpha;
}

}  // namespace

BatchGradient batch_gradient_serial(const TaskSuite& suite, std::span<const int> batch,
                                    const Vector& x, const InnerStep& step) {
  std::vector<InnerResult> slots;
  slots.reserve(batch.size());
  for (int i : batch) slots.push_back(step(suite.task(i), x));
  return reduce(slots, x.size());
}

BatchGradient batch_gradient(const TaskSuite& suite, std::span<const int> batch, const Vector& x,
                             const InnerStep& step) {
  const auto count = static_cast<int>(batch.size());
  std::vector<InnerResult> slots(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
#pragma omp parallel for schedule(static) if (count >= 4)
  for (int b = 0; b < count; ++b) {
    const auto slot = static_cast<std::size_t>(b);
    try {
      slots[slot] = step(suite.task(batch[slot]), x);
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reduce(slots, x.size());
}

EnvelopeEval envelope_eval_serial(const TaskSuite& suite, const Vector& x, double alpha) {
  const auto n = static_cast<std::size_t>(suite.size());
  std::vector<double> values(n);
  std::vector<Vector> grads(n);
  for (std::size_t i = 0; i < n; ++i) {
    one_envelope(suite.task(static_cast<int>(i)), x, alpha, values[i], grads[i]);
  }
  return reduce(std::move(values), std::move(grads), x.size());
}

EnvelopeEval envelope_eval(const TaskSuite& suite, const Vector& x, double alpha) {
  const int n = suite.size();
  std::vector<double> values(static_cast<std::size_t>(n));
  std::vector<Vector> grads(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (n >= 4)
  for (int i = 0; i < n; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    try {
      one_envelope(suite.task(i), x, alpha, values[slot], grads[slot]);
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reduce(std::move(values), std::move(grads), x.size());
}

}  // namespace moreau::kernels
