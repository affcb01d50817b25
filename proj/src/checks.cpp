#include "moreau/checks.hpp"

#include "moreau/algorithms.hpp"
#include "moreau/counterexamples.hpp"
#include "moreau/envelope.hpp"
#include "moreau/error.hpp"
#include "moreau/experiment.hpp"
#include "moreau/ground_truth.hpp"
#include "moreau/rng.hpp"
#include "moreau/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>

namespace moreau::checks {

namespace {

namespace cx = counterexamples;
using harness::ExperimentConfig;
using harness::ExperimentOptions;

template <class... Args>
std::string fmt(const char* format, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

Vector gaussian(Rng& rng, int d, double scale) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

Vector exact_envelope_grad(const TaskLoss& task, const Vector& x, double alpha) {
  return (x - prox_reference(task, x, alpha)) / alpha;
}

CheckResult timed(const char* name, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.expect(false, std::string("unexpected error: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// sum_j L cos(z_j + phase_j): L-smooth, nonconvex, bounded below.
TaskLoss cosine_task(int d, double L, Rng& rng) {
  Vector phase = gaussian(rng, d, 2.0);
  auto value = [L, phase](const Vector& z) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) s += L * std::cos(z[j] + phase[j]);
    return s;
  };
  auto gradient = [L, phase](const Vector& z) {
    Vector g(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) g[j] = -L * std::sin(z[j] + phase[j]);
    return g;
  };
  return TaskLoss::custom(d, value, gradient, L, 0.0, Convexity::kNonconvex);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool same_trajectory(const Trajectory& a, const Trajectory& b, std::string& why) {
  if (a.records.size() != b.records.size()) {
    why = "record counts differ";
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const Record& p = a.records[i];
    const Record& q = b.records[i];
    if (!same_bits(p.dist_sq, q.dist_sq) || !same_bits(p.F_val, q.F_val) ||
        !same_bits(p.grad_norm_sq, q.grad_norm_sq) ||
        !same_bits(p.mean_cert_err, q.mean_cert_err)) {
      why = "record " + std::to_string(i) + " differs";
      return false;
    }
  }
  if (a.x_final.size() != b.x_final.size() ||
      std::memcmp(a.x_final.data(), b.x_final.data(),
                  sizeof(double) * static_cast<std::size_t>(a.x_final.size())) != 0) {
    why = "final iterates differ";
    return false;
  }
  return true;
}

ExperimentConfig quadratic_config(int n, int d, double mu, double L, double spread,
                                  std::uint64_t seed) {
  ExperimentConfig c;
  c.suite.family = SuiteFamily::kQuadratic;
  c.suite.n = n;
  c.suite.d = d;
  c.suite.mu = mu;
  c.suite.L = L;
  c.suite.spread = spread;
  c.suite.seed = seed;
  return c;
}

const harness::CheckOutcome* find_outcome(const harness::ExperimentResult& r,
                                          std::string_view name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

void CheckResult::expect(bool ok, const std::string& what) {
  lines.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  if (!ok) passed = false;
}

void CheckResult::info(const std::string& what) { lines.push_back("info  " + what); }

CheckResult lemma4() {
  return timed("lemma4", [](CheckResult& r) {
    const double grid_aL[] = {0.1, 0.25, 0.5};
    long long cases = 0;
    long long violations = 0;
    double worst = 0.0;
    for (int d : {1, 5}) {
      const TaskSuite suite = make_quadratic_suite(20, d, 0.05, 1.0, 2.0, 4100 + d);
      Rng rng = Rng::stream(41, static_cast<std::uint64_t>(d));
      for (const auto& task : suite.tasks()) {
        const double L = task.smoothness();
        for (int trial = 0; trial < 3; ++trial) {
          const Vector x = gaussian(rng, d, 2.0);
          for (double aL : grid_aL) {
            const double alpha = aL / L;
            const Vector gF = exact_envelope_grad(task, x, alpha);
            for (int s = 0; s <= 5; ++s) {
              const Vector z = prox_fixed_point(task, x, alpha, s);
              const double err = (task.gradient(z) - gF).norm();
              const double bound = theory::inner_error_bound(alpha, L, s) * gF.norm();
              ++cases;
              if (!(err <= bound + 1e-12)) ++violations;
              if (bound > 0.0) worst = std::max(worst, err / bound);
            }
          }
        }
      }
    }
    r.expect(violations == 0, fmt("|grad f(z_s) - grad F(x)| <= (aL)^(s+1)|grad F(x)| + 1e-12: "
                                  "%lld/%lld cases, worst ratio %.6f",
                                  cases - violations, cases, worst));

    // f = L z^2 / 2: the bound is attained
    double max_gap = 0.0;
    for (double aL : grid_aL) {
      const double L = 2.0;
      const double alpha = aL / L;
      const TaskLoss task = TaskLoss::quadratic(Matrix::Constant(1, 1, L), Vector::Zero(1), L, L);
      const Vector x = Vector::Constant(1, 1.0);
      const Vector gF = exact_envelope_grad(task, x, alpha);
      for (int s = 0; s <= 5; ++s) {
        const Vector z = prox_fixed_point(task, x, alpha, s);
        const double err = (task.gradient(z) - gF).norm();
        const double bound = theory::inner_error_bound(alpha, L, s) * gF.norm();
        max_gap = std::max(max_gap, std::abs(err - bound));
      }
    }
    r.expect(max_gap <= 1e-12, fmt("1-D tightness: max |error - bound| = %.3e", max_gap));
  });
}

CheckResult remark_a1() {
  return timed("remarkA1", [](CheckResult& r) {
    const double grid_aL[] = {0.1, 0.25, 0.5};
    long long cases = 0;
    long long violations = 0;
    double worst = 0.0;
    long long cert_cases = 0;
    long long cert_raised = 0;
    std::string unexpected;
    for (int d : {1, 5}) {
      const TaskSuite suite = make_quadratic_suite(20, d, 0.05, 1.0, 2.0, 4200 + d);
      Rng rng = Rng::stream(42, static_cast<std::uint64_t>(d));
      int task_index = 0;
      for (const auto& task : suite.tasks()) {
        const double L = task.smoothness();
        for (int trial = 0; trial < 3; ++trial) {
          const Vector x = gaussian(rng, d, 2.0);
          for (double aL : grid_aL) {
            const double alpha = aL / L;
            const Vector gF = exact_envelope_grad(task, x, alpha);
            for (double gamma : {alpha / 2.0, 2.0 * alpha}) {
              if (gamma * L >= 1.0) continue;
              for (int s = 0; s <= 5; ++s) {
                const Vector z = prox_fixed_point(task, x, alpha, s, gamma);
                const double err = ((x - z) / gamma - gF).norm();
                const double bound = theory::mismatched_step_bound(alpha, gamma, L, s) * gF.norm();
                ++cases;
                if (!(err <= bound + 1e-12)) ++violations;
                if (bound > 0.0) worst = std::max(worst, err / bound);
              }
              // a handful of tasks is enough for the negative result
              if (trial != 0 || task_index >= 5) continue;
              const double floor = std::abs(alpha - gamma) * L;
              for (double frac : {0.5, 0.9}) {
                const double delta = frac * floor;
                for (int cap : {10, 100, 1000}) {
                  ++cert_cases;
                  try {
                    prox_to_delta(task, x, alpha, delta, std::min(1e-12, delta / 100.0), gamma,
                                  cap);
                  } catch (const Error& e) {
                    if (e.code() == ErrorCode::kCertificationFailed) {
                      ++cert_raised;
                      continue;
                    }
                    unexpected = e.what();
                  }
                }
              }
            }
          }
        }
        ++task_index;
      }
    }
    r.expect(violations == 0,
             fmt("|(x - z_s)/gamma - grad F(x)| <= ((gamma L)^s + |alpha - gamma| L)|grad F(x)|: "
                 "%lld/%lld cases, worst ratio %.6f",
                 cases - violations, cases, worst));
    r.expect(cert_raised == cert_cases && unexpected.empty(),
             fmt("delta < |alpha - gamma| L with caps 10/100/1000 raises certification-failed: "
                 "%lld/%lld",
                 cert_raised, cert_cases) +
                 (unexpected.empty() ? "" : " (unexpected: " + unexpected + ")"));
  });
}

CheckResult envelope() {
  return timed("envelope", [](CheckResult& r) {
    // gradient identity (x - z)/alpha = grad f(z)
    {
      double worst = 0.0;
      const TaskSuite quad = make_quadratic_suite(10, 6, 0.1, 3.0, 2.0, 4300);
      const TaskSuite logi = make_logistic_suite(6, 4, 40, 0.01, 4301);
      Rng rng = Rng::stream(43, 0);
      for (const TaskSuite* suite : {&quad, &logi}) {
        for (const auto& task : suite->tasks()) {
          const double alpha = 0.5 / task.smoothness();
          for (int t = 0; t < 10; ++t) {
            const Vector x = gaussian(rng, task.dimension(), 2.0);
            const Vector z = prox_reference(task, x, alpha);
            const Vector g = task.gradient(z);
            worst = std::max(worst, ((x - z) / alpha - g).norm() / std::max(1.0, g.norm()));
          }
        }
      }
      r.expect(worst <= 1e-9, fmt("(x - z)/alpha vs grad f(z): worst %.3e (tol 1e-9)", worst));
    }
    // finite differences of F
    {
      double worst = 0.0;
      const TaskSuite quad = make_quadratic_suite(5, 4, 0.2, 2.0, 1.0, 4310);
      const TaskSuite logi = make_logistic_suite(5, 4, 40, 0.0, 4311);
      Rng rng = Rng::stream(43, 1);
      const double h = 1e-5;
      for (const TaskSuite* suite : {&quad, &logi}) {
        for (const auto& task : suite->tasks()) {
          const double alpha = 0.4 / task.smoothness();
          for (int t = 0; t < 5; ++t) {
            const Vector x = gaussian(rng, task.dimension(), 1.5);
            const Vector g = envelope_grad(task, x, alpha);
            Vector fd(x.size());
            for (Eigen::Index j = 0; j < x.size(); ++j) {
              Vector xp = x, xm = x;
              xp[j] += h;
              xm[j] -= h;
              fd[j] = (envelope_value(task, xp, alpha) - envelope_value(task, xm, alpha)) / (2 * h);
            }
            worst = std::max(worst, (fd - g).norm() / std::max(1.0, g.norm()));
          }
        }
      }
      r.expect(worst <= 1e-5, fmt("central differences of F vs grad F: worst %.3e (tol 1e-5)", worst));
    }
    // constants on random pairs, per convexity class
    struct ClassCase {
      Convexity cls;
      std::vector<TaskLoss> tasks;
    };
    Rng rng = Rng::stream(43, 2);
    std::vector<ClassCase> cases;
    cases.push_back({Convexity::kStronglyConvex,
                     make_quadratic_suite(4, 5, 0.5, 2.0, 1.0, 4320).tasks()});
    {
      auto t = make_logistic_suite(2, 5, 40, 0.05, 4321).tasks();
      cases.back().tasks.insert(cases.back().tasks.end(), t.begin(), t.end());
    }
    cases.push_back({Convexity::kConvex, make_logistic_suite(4, 5, 40, 0.0, 4322).tasks()});
    {
      std::vector<TaskLoss> nc;
      for (int i = 0; i < 4; ++i) nc.push_back(cosine_task(5, 1.5, rng));
      cases.push_back({Convexity::kNonconvex, std::move(nc)});
    }
    for (const auto& cc : cases) {
      const int pairs = 1000;
      int smooth_bad = 0;
      int mono_bad = 0;
      double worst_smooth = 0.0;
      double worst_mono = std::numeric_limits<double>::infinity();
      for (int p = 0; p < pairs; ++p) {
        const TaskLoss& task = cc.tasks[static_cast<std::size_t>(p) % cc.tasks.size()];
        const double aL = (p % 2 == 0) ? 0.25 : 0.6;
        const double alpha = aL / task.smoothness();
        const auto k = theory::envelope_constants(task.smoothness(), task.strong_convexity(), alpha,
                                                  task.convexity());
        const Vector x = gaussian(rng, task.dimension(), 2.0);
        const double scale = (p % 3 == 0) ? 1e-2 : 1.0;
        const Vector y = x + gaussian(rng, task.dimension(), scale);
        const Vector gx = exact_envelope_grad(task, x, alpha);
        const Vector gy = exact_envelope_grad(task, y, alpha);
        const double dist2 = (x - y).squaredNorm();
        const double lip = (gx - gy).norm() / std::sqrt(dist2);
        const double mono = (gx - gy).dot(x - y) / dist2;
        worst_smooth = std::max(worst_smooth, lip / k.L_F);
        if (lip > k.L_F * (1.0 + 1e-9) + 1e-12) ++smooth_bad;
        if (cc.cls != Convexity::kNonconvex) {
          const double need = k.mu_F;
          worst_mono = std::min(worst_mono, need > 0.0 ? mono / need : mono);
          if (mono < need * (1.0 - 1e-9) - 1e-12) ++mono_bad;
        }
      }
      const std::string cls(to_string(cc.cls));
      r.expect(smooth_bad == 0, fmt("%s: |grad F(x) - grad F(y)| <= L_F |x - y| on %d pairs "
                                    "(max ratio %.6f)",
                                    cls.c_str(), pairs - smooth_bad, worst_smooth));
      if (cc.cls == Convexity::kStronglyConvex) {
        r.expect(mono_bad == 0, fmt("%s: <grad F(x) - grad F(y), x - y> >= mu_F |x - y|^2 on %d "
                                    "pairs (min ratio %.6f)",
                                    cls.c_str(), pairs - mono_bad, worst_mono));
      } else if (cc.cls == Convexity::kConvex) {
        r.expect(mono_bad == 0, fmt("%s: <grad F(x) - grad F(y), x - y> >= 0 on %d pairs",
                                    cls.c_str(), pairs - mono_bad));
      }
    }
  });
}

CheckResult thm41(int seeds) {
  return timed("thm41", [seeds](CheckResult& r) {
    ExperimentConfig c = quadratic_config(8, 4, 0.25, 1.0, 1.0, 4400);
    const double kappa = 4.0;
    c.alpha = 1.0 / (4.0 * std::sqrt(kappa) * 1.0);
    c.outer.method = Method::kFoMaml;
    c.outer.beta = 1.0 / 20.0;
    c.outer.tau = 2;
    c.outer.K = 500;
    c.repetitions = seeds;
    c.base_seed = 4400;
    c.checks = {"thm41"};
    const auto res = harness::run_experiment(c, {}, ExperimentOptions{false, true});
    const auto* o = find_outcome(res, "thm41");
    r.expect(o != nullptr && o->status == harness::kStatusPass,
             "FO-MAML, " + std::to_string(seeds) + " seeds, every k <= 500: " +
                 (o ? o->status + " (" + o->detail + ")" : std::string("missing")));
  });
}

CheckResult thm42(int seeds) {
  return timed("thm42", [seeds](CheckResult& r) {
    const double L = 1.0;
    const double mu = 0.1;
    const double kappa = L / mu;
    ExperimentConfig c = quadratic_config(8, 5, mu, L, 1.0, 4500);
    c.alpha = 0.5 / L;
    c.outer.method = Method::kFoMuml;
    c.outer.inner = InnerSolverSpec::to_delta(1.0 / (4.0 * std::sqrt(kappa)), 1e-12);
    c.outer.beta = 1.0 / (20.0 * L);
    c.outer.tau = 1;
    c.outer.K = 1000;
    c.repetitions = seeds;
    c.base_seed = 4500;
    c.checks = {"thm42"};
    const auto res = harness::run_experiment(c, {}, ExperimentOptions{false, true});
    const auto suite = make_suite(c.suite);
    const auto bound = theory::rate_thm42(L, mu, c.alpha, c.outer.beta, 1.0,
                                          c.outer.inner.delta, res.ground_truth.sigma_star_sq);
    r.expect(bound.precondition_ok, "preconditions: " + bound.precondition);
    const double d0 = res.summary.front().dist_sq.mean;
    for (long long k : {10LL, 100LL, 1000LL}) {
      const auto& row = res.summary[static_cast<std::size_t>(k)];
      const double rhs = bound.at(k, d0);
      r.expect(row.dist_sq.mean <= rhs + 3.0 * row.dist_sq.se,
               fmt("k=%lld: mean %.6e <= bound %.6e + 3 SE %.3e", k, row.dist_sq.mean, rhs,
                   3.0 * row.dist_sq.se));
    }
    const auto* o = find_outcome(res, "thm42");
    if (o != nullptr) r.info("all k <= 1000: " + o->status + " (" + o->detail + ")");
  });
}

CheckResult thm54() {
  return timed("thm54", [](CheckResult& r) {
    struct Case {
      double kappa;
      int d;
      std::uint64_t seed;
    };
    const Case cases[] = {{1.0, 3, 4601}, {10.0, 5, 4602}, {100.0, 5, 4603}, {10.0, 8, 4604},
                          {100.0, 8, 4605}};
    for (const auto& cs : cases) {
      const double L = 1.0;
      const int n = 4;
      ExperimentConfig c = quadratic_config(n, cs.d, L / cs.kappa, L, 1.0, cs.seed);
      c.alpha = 1.0 / (std::sqrt(6.0) * L);
      c.outer.method = Method::kFullGd;
      c.outer.tau = n;
      c.outer.beta = n / (4.0 * L);
      c.outer.K = 2000;
      c.checks = {"thm54"};
      const auto res = harness::run_experiment(c, {}, ExperimentOptions{false, true});
      const auto* o = find_outcome(res, "thm54");
      r.expect(o != nullptr && o->status == harness::kStatusPass &&
                   res.summary.size() == 2001,
               fmt("kappa=%g d=%d: ", cs.kappa, cs.d) +
                   (o ? o->status + " (" + o->detail + ")" : std::string("missing")));
    }
  });
}

CheckResult thm56(int seeds) {
  return timed("thm56", [seeds](CheckResult& r) {
    ExperimentConfig c;
    c.suite.family = SuiteFamily::kLogistic;
    c.suite.n = 8;
    c.suite.d = 5;
    c.suite.samples_per_task = 50;
    c.suite.reg = 0.0;
    c.suite.spread = 1.0;
    c.suite.seed = 4700;
    const TaskSuite suite = make_suite(c.suite);
    const double L = suite.smoothness();
    c.alpha = 1.0 / (8.0 * L);
    c.outer.method = Method::kFoMaml;
    c.outer.beta = 1.0 / (16.0 * L);
    c.outer.tau = 2;
    c.outer.K = 1000;
    c.repetitions = seeds;
    c.base_seed = 4700;
    c.checks = {"thm56"};
    const auto res = harness::run_experiment(c, {}, ExperimentOptions{false, true});
    r.info(fmt("L = %.6f, sigma^2 estimate (x2) = %.6e, ground truth %s, |grad F(x*)| = %.2e", L,
               res.sigma_sq_estimate.value_or(-1.0),
               res.ground_truth.numerical ? "numerical" : "closed-form",
               res.ground_truth.grad_norm));
    const double gap = std::max(0.0, res.summary.front().F_val.mean - res.ground_truth.F_star);
    for (long long k : {100LL, 1000LL}) {
      const auto b = theory::rate_thm56(L, c.alpha, c.outer.beta, 2.0, c.alpha * L,
                                        *res.sigma_sq_estimate, gap, k);
      const auto& row = res.summary[static_cast<std::size_t>(k)];
      r.expect(b.precondition_ok && row.min_mean_grad_norm_sq <= b.bound,
               fmt("k=%lld: min_t<=k mean |grad F|^2 = %.6e <= bound %.6e", k,
                   row.min_mean_grad_norm_sq, b.bound));
    }
    const auto* o = find_outcome(res, "thm56");
    if (o != nullptr) r.info("all k <= 1000: " + o->status + " (" + o->detail + ")");
  });
}

CheckResult bias() {
  return timed("bias", [](CheckResult& r) {
    auto suite_1d = [] {
      std::vector<TaskLoss> tasks;
      tasks.push_back(TaskLoss::quadratic(Matrix::Constant(1, 1, 1.0), Vector::Zero(1), 1.0, 1.0));
      tasks.push_back(
          TaskLoss::quadratic(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 3.0), 2.0, 2.0));
      SuiteDescriptor desc;
      desc.n = 2;
      desc.d = 1;
      desc.mu = 1.0;
      desc.L = 2.0;
      return TaskSuite(desc, std::move(tasks));
    }();
    const double beta = 0.2;
    auto bias_at = [&](double alpha, double& x_star, double& x_inf, double& x_iter) {
      const auto gt = harness::solve_ground_truth(suite_1d, alpha);
      x_star = gt.x_star[0];
      x_inf = harness::bias_fixed_point(suite_1d, alpha, beta)[0];
      const auto traj = run_fo_maml(suite_1d, Vector::Zero(1), alpha, beta, 2, 400, 0,
                                    RunOptions{gt.x_star, 0, false, false, false, false});
      x_iter = traj.x_final[0];
    };
    double s1, f1, i1, s2, f2, i2;
    bias_at(0.1, s1, f1, i1);
    bias_at(0.05, s2, f2, i2);
    const double b1 = std::abs(f1 - s1);
    const double b2 = std::abs(f2 - s2);
    // hand solves: x* = 6(1 + a)/(3 + 4a), x_inf = 6(1 - 2a)/(3 - 5a)
    auto hand_star = [](double a) { return 6.0 * (1.0 + a) / (3.0 + 4.0 * a); };
    auto hand_inf = [](double a) { return 6.0 * (1.0 - 2.0 * a) / (3.0 - 5.0 * a); };
    r.expect(std::abs(s1 - hand_star(0.1)) <= 1e-12 && std::abs(f1 - hand_inf(0.1)) <= 1e-12 &&
                 std::abs(s2 - hand_star(0.05)) <= 1e-12 && std::abs(f2 - hand_inf(0.05)) <= 1e-12,
             fmt("alpha=0.1: x* = %.9f, x_inf = %.9f; alpha=0.05: x* = %.9f, x_inf = %.9f", s1, f1,
                 s2, f2));
    r.expect(std::abs(b1 - 0.021176) <= 5e-7, fmt("alpha=0.1 bias %.7f vs 0.021176", b1));
    r.expect(std::abs(b2 - 0.005116) <= 5e-6, fmt("alpha=0.05 bias %.7f vs 0.005116", b2));
    r.info(fmt("bias ratio %.4f (4.14 expected)", b1 / b2));
    r.expect(std::abs(b1 / b2 - 4.14) <= 0.01, fmt("bias ratio %.4f within 0.01 of 4.14", b1 / b2));
    r.expect(std::abs(i1 - f1) <= 1e-8 && std::abs(i2 - f2) <= 1e-8,
             fmt("iterative FO-MAML limit vs fixed point: %.2e, %.2e (tol 1e-8)",
                 std::abs(i1 - f1), std::abs(i2 - f2)));

    // log-log slope of |x_inf - x*| against alpha from iterative runs
    std::vector<double> lx, ly;
    for (double alpha : {0.0125, 0.025, 0.05, 0.1}) {
      double s, f, it;
      bias_at(alpha, s, f, it);
      lx.push_back(std::log(alpha));
      ly.push_back(std::log(std::abs(it - s)));
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    r.expect(slope >= 1.85 && slope <= 2.15,
             fmt("alpha in {0.0125..0.1}: log-log slope of |x_inf - x*| = %.4f in [1.85, 2.15]",
                 slope));
  });
}

CheckResult counterexample() {
  return timed("counterexample", [](CheckResult& r) {
    constexpr double kThreshold = 75.0 / 2249.0;
    constexpr double kStep = 1e-6;

    // verdict flip at the threshold
    const auto below = cx::verify_nonconvexity(kThreshold - kStep, 0);
    const auto above = cx::verify_nonconvexity(kThreshold + kStep, 0);
    r.expect(below.verdict == cx::Verdict::kNotCertified &&
                 above.verdict == cx::Verdict::kNonconvex,
             fmt("verdict at alpha* -/+ 1e-6: %s / %s (closed form at x0: %.3e / %.3e, "
                 "FD: %.3e / %.3e)",
                 std::string(cx::to_string(below.verdict)).c_str(),
                 std::string(cx::to_string(above.verdict)).c_str(), below.phi2_closed_form,
                 above.phi2_closed_form, below.phi2_fd, above.phi2_fd));
    r.info(fmt("closed-form expression at x0 changes sign across alpha* +/- 1e-6: %s, value at "
               "alpha* = %.2e",
               (below.phi2_closed_form > 0 && above.phi2_closed_form < 0) ? "yes" : "no",
               cx::phi_second_closed_form_at_witness(kThreshold)));

    // closed form vs finite differences at x0
    for (double alpha : {0.05, 0.1, 0.5, 1.0}) {
      const auto rep = cx::verify_nonconvexity(alpha, 0);
      const double scale = std::max(std::abs(rep.phi2_closed_form), std::abs(rep.phi2_fd));
      const double rel = std::abs(rep.phi2_closed_form - rep.phi2_fd) / scale;
      r.expect(rel <= 1e-4,
               fmt("alpha=%g x0=%.7f: closed form %.6e vs FD %.6e (rel %.2e); chain rule %.6e",
                   alpha, rep.x0, rep.phi2_closed_form, rep.phi2_fd, rel, rep.phi2_chain));
      r.info(fmt("alpha=%g: most negative phi'' near z=1/3 at z=%.9f: chain %.3e, FD %.3e (%s)",
                 alpha, rep.witness_z, rep.witness_phi2_chain, rep.witness_phi2_fd,
                 rep.witness_certified ? "nonconvex" : "not certified"));
    }

    // chain rule vs finite differences over grids of both functions
    {
      const auto quartic = cx::piecewise_quartic();
      const auto cosine = cx::quadratic_cosine();
      int compared = 0;
      int bad = 0;
      double worst = 0.0;
      for (double alpha : {0.05, 0.1, 0.5, 1.0}) {
        for (int j = 0; j < 50; ++j) {
          const double xq = -2.0 + 4.0 * (j + 0.5) / 50.0;
          const double xc = -12.0 + 24.0 * (j + 0.5) / 50.0;
          for (int which = 0; which < 2; ++which) {
            const auto& f = which == 0 ? quartic : cosine;
            const double x = which == 0 ? xq : xc;
            const auto dv = cx::phi_derivatives(f, x, alpha);
            if (which == 0) {
              // skip stencils that straddle a jump of f'''
              const double zl = cx::imaml_inner_solve(f, x - 1e-4, alpha);
              const double zr = cx::imaml_inner_solve(f, x + 1e-4, alpha);
              bool straddles = false;
              for (double kink : {-1.0, 0.0, 1.0}) {
                if ((zl - kink) * (zr - kink) <= 0.0) straddles = true;
              }
              if (straddles) continue;
            }
            double closed = dv.phi2;
            if (which == 1) closed = cx::phi_second_quadratic_cosine(alpha, dv.z);
            if (std::abs(closed) < 1e-3) continue;
            const double fd = cx::phi_second_fd(f, x, alpha);
            const double rel = std::abs(closed - fd) / std::abs(closed);
            worst = std::max(worst, rel);
            ++compared;
            if (rel > 1e-4) ++bad;
          }
        }
      }
      r.expect(bad == 0, fmt("chain-rule / closed-form phi'' vs FD on 50-point grids, 4 alphas, "
                             "both functions: %d/%d within 1e-4 (worst %.2e)",
                             compared - bad, compared, worst));
    }

    // nonsmoothness
    {
      const auto rep = cx::verify_nonsmoothness(1.0, cx::default_nonsmooth_targets(1, 10));
      double worst = 0.0;
      for (const auto& p : rep.points) {
        worst = std::max(worst, std::abs(p.phi2_closed - p.phi2_fd) / std::abs(p.phi2_closed));
      }
      r.expect(rep.strictly_increasing,
               fmt("alpha=1, z_m=(2m+1/2)pi, m=1..10: |phi''| strictly increasing, max %.4f",
                   rep.max_abs_phi2));
      r.expect(worst <= 1e-4, fmt("nonsmooth closed form vs FD: worst rel %.2e", worst));
    }
  });
}

CheckResult reductions() {
  return timed("reductions", [](CheckResult& r) {
    struct Case {
      SuiteDescriptor desc;
      double alpha;
      double beta;
      int tau;
      std::uint64_t seed;
    };
    std::vector<Case> cases;
    {
      SuiteDescriptor d;
      d.n = 6, d.d = 4, d.mu = 0.2, d.L = 2.0, d.spread = 1.0, d.seed = 4901;
      cases.push_back({d, 0.1, 0.1, 2, 11});
    }
    {
      SuiteDescriptor d;
      d.n = 5, d.d = 3, d.mu = 0.5, d.L = 1.0, d.spread = 2.0, d.seed = 4902;
      cases.push_back({d, 0.3, 0.2, 3, 22});
    }
    {
      SuiteDescriptor d;
      d.family = SuiteFamily::kLogistic;
      d.n = 4, d.d = 3, d.samples_per_task = 30, d.reg = 0.01, d.spread = 1.0, d.seed = 4903;
      cases.push_back({d, 0.5, 0.5, 2, 33});
    }
    for (const auto& cs : cases) {
      const TaskSuite suite = make_suite(cs.desc);
      const double alpha = cs.alpha / suite.smoothness();
      const Vector x0 = Vector::Constant(suite.dimension(), 0.5);
      const auto gt = harness::ground_truth(suite, alpha);
      RunOptions opt;
      opt.x_star = gt.x_star;
      opt.timing = false;
      const std::string label = std::string(to_string(cs.desc.family)) + " seed " +
                                std::to_string(cs.desc.seed);
      std::string why;
      const auto a = run_fo_muml(suite, x0, alpha, cs.beta, cs.tau, 60,
                                 InnerSolverSpec::fixed_point(1), cs.seed, opt);
      const auto b = run_fo_maml(suite, x0, alpha, cs.beta, cs.tau, 60, cs.seed, opt);
      r.expect(same_trajectory(a, b, why), label + ": fo-muml(fixed-point, 1) == fo-maml" +
                                               (why.empty() ? "" : " (" + why + ")"));
      why.clear();
      const auto c = run_fo_muml(suite, x0, alpha, cs.beta, suite.size(), 60,
                                 InnerSolverSpec::exact(), cs.seed, opt);
      const auto d = run_full_gd(suite, x0, alpha, cs.beta, 60, opt);
      r.expect(same_trajectory(c, d, why), label + ": fo-muml(exact, tau=n) == full-gd" +
                                               (why.empty() ? "" : " (" + why + ")"));
    }
  });
}

std::vector<std::string_view> names() {
  return {"lemma4", "remarkA1", "envelope", "thm41", "thm42", "thm54", "thm56",
          "bias",   "counterexample", "reductions"};
}

std::optional<CheckResult> run_named(std::string_view name) {
  if (name == "lemma4") return lemma4();
  if (name == "remarkA1") return remark_a1();
  if (name == "envelope") return envelope();
  if (name == "thm41") return thm41();
  if (name == "thm42") return thm42();
  if (name == "thm54") return thm54();
  if (name == "thm56") return thm56();
  if (name == "bias") return bias();
  if (name == "counterexample") return counterexample();
  if (name == "reductions") return reductions();
  return std::nullopt;
}

}  // namespace moreau::checks
