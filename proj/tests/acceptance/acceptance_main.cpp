// Acceptance runner: one PASS/FAIL line per criterion, each with its
// runtime budget. Usage: acceptance [criterion ...]; no arguments runs all.

#include "moreau/checks.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

namespace {

using moreau::checks::CheckResult;

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<CheckResult()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "inner-loop error (alpha L)^(s+1)", 5.0, [] { return moreau::checks::lemma4(); }},
      {2, "mismatched inner stepsize", 5.0, [] { return moreau::checks::remark_a1(); }},
      {3, "envelope identity and constants", 10.0, [] { return moreau::checks::envelope(); }},
      {4, "deterministic full-batch distance bound", 30.0,
       [] { return moreau::checks::thm54(); }},
      {5, "stochastic delta-oracle distance bound", 120.0,
       [] { return moreau::checks::thm42(200); }},
      {6, "FO-MAML bias scaling", 10.0, [] { return moreau::checks::bias(); }},
      {7, "nonconvex gradient-norm bound", 60.0, [] { return moreau::checks::thm56(20); }},
      {8, "counterexample certification", 5.0, [] { return moreau::checks::counterexample(); }},
      {9, "reduction identities", 5.0, [] { return moreau::checks::reductions(); }},
  };
  return all;
}

bool run_one(const Criterion& c) {
  const CheckResult r = c.run();
  for (const auto& line : r.lines) std::printf("    %s\n", line.c_str());
  const bool in_time = r.seconds <= c.budget_s;
  const bool ok = r.passed && in_time;
  std::printf("criterion %d [PRIMARY] %s: %s (%.2f s, budget %.0f s%s)\n", c.id, c.title,
              ok ? "PASS" : "FAIL", r.seconds, c.budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool all_ok = true;
  for (const auto& c : criteria()) {
    if (!selected.empty()) {
      bool wanted = false;
      for (int id : selected) wanted = wanted || id == c.id;
      if (!wanted) continue;
    }
    all_ok = run_one(c) && all_ok;
  }
  return all_ok ? 0 : 1;
}
