// Serial reference vs OpenMP kernels on logistic suites.

#include "moreau/algorithms.hpp"
#include "moreau/envelope.hpp"
#include "moreau/kernels.hpp"
#include "moreau/tasks.hpp"

#include <benchmark/benchmark.h>

#include <functional>
#include <map>
#include <numeric>
#include <vector>

namespace {

using namespace moreau;

const TaskSuite& suite(int n) {
  static std::map<int, TaskSuite> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_logistic_suite(n, 20, 200, 0.01, 1)).first;
  return it->second;
}

std::vector<int> all_tasks(int n) {
  std::vector<int> b(static_cast<std::size_t>(n));
  std::iota(b.begin(), b.end(), 0);
  return b;
}

const kernels::InnerStep kStep = [](const TaskLoss& t, const Vector& x) {
  return inner_solve(t, x, 0.5 / t.smoothness(), InnerSolverSpec::fixed_point(5));
};

template <bool Parallel>
void BM_BatchGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto& s = suite(n);
  const auto batch = all_tasks(n);
  const Vector x = Vector::Ones(20);
  for (auto _ : state) {
    auto g = Parallel ? kernels::batch_gradient(s, batch, x, kStep)
                      : kernels::batch_gradient_serial(s, batch, x, kStep);
    benchmark::DoNotOptimize(g.mean.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void BM_EnvelopeEval(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto& s = suite(n);
  const Vector x = Vector::Ones(20);
  const double alpha = 0.5 / s.smoothness();
  for (auto _ : state) {
    auto e = Parallel ? kernels::envelope_eval(s, x, alpha)
                      : kernels::envelope_eval_serial(s, x, alpha);
    benchmark::DoNotOptimize(e.value);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void BM_Repetitions(benchmark::State& state) {
  const int reps = static_cast<int>(state.range(0));
  const auto& s = suite(16);
  RunOptions opt;
  opt.timing = false;
  opt.parallel = false;
  const std::function<double(int)> one = [&](int r) {
    return run_fo_maml(s, Vector::Zero(20), 0.05, 0.05, 4, 20, static_cast<std::uint64_t>(r), opt)
        .x_final[0];
  };
  for (auto _ : state) {
    auto v = Parallel ? kernels::map_indices<double>(reps, one)
                      : kernels::map_indices_serial<double>(reps, one);
    benchmark::DoNotOptimize(v.data());
  }
}

}  // namespace

BENCHMARK(BM_BatchGradient<false>)->Name("batch_gradient/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_BatchGradient<true>)->Name("batch_gradient/openmp")->Arg(16)->Arg(64)->UseRealTime();
BENCHMARK(BM_EnvelopeEval<false>)->Name("envelope_eval/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_EnvelopeEval<true>)->Name("envelope_eval/openmp")->Arg(16)->Arg(64)->UseRealTime();
BENCHMARK(BM_Repetitions<false>)->Name("repetitions/serial")->Arg(8);
BENCHMARK(BM_Repetitions<true>)->Name("repetitions/openmp")->Arg(8)->UseRealTime();

BENCHMARK_MAIN();
