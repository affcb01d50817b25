#pragma once

// Data-parallel kernels. Every OpenMP kernel has a `_serial` twin that is the
// reference implementation; both write per-index slots and reduce them in
// ascending index order, so their results are bitwise identical.

#include "moreau/envelope.hpp"
#include "moreau/tasks.hpp"

#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace moreau::kernels {

using InnerStep = std::function<InnerResult(const TaskLoss& task, const Vector& x)>;

struct BatchGradient {
  Vector mean;                 // (1/|batch|) sum_i g_i
  double mean_cert_err = 0.0;  // NaN when any slot was uncertified
};

BatchGradient batch_gradient_serial(const TaskSuite& suite, std::span<const int> batch,
                                    const Vector& x, const InnerStep& step);
BatchGradient batch_gradient(const TaskSuite& suite, std::span<const int> batch, const Vector& x,
                             const InnerStep& step);

/// F(x), grad F(x) and the per-task envelope gradients, all from the reference prox.
struct EnvelopeEval {
  double value = 0.0;
  Vector gradient;
  std::vector<Vector> task_gradients;
};

EnvelopeEval envelope_eval_serial(const TaskSuite& suite, const Vector& x, double alpha);
EnvelopeEval envelope_eval(const TaskSuite& suite, const Vector& x, double alpha);

/// out[i] = fn(i) for i in [0, count).
template <class R>
std::vector<R> map_indices_serial(int count, const std::function<R(int)>& fn) {
  std::vector<R> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(fn(i));
  return out;
}

template <class R>
std::vector<R> map_indices(int count, const std::function<R(int)>& fn) {
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < count; ++i) {
    try {
      slots[static_cast<std::size_t>(i)].emplace(fn(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace moreau::kernels
