// moreau: command-line front end for experiments, sweeps, numerical checks,
// counterexample certificates and artifact export.

#include "moreau/checks.hpp"
#include "moreau/config.hpp"
#include "moreau/error.hpp"
#include "moreau/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

namespace h = moreau::harness;

int do_run(const std::string& config_path) {
  const auto config = h::load_config(config_path);
  const auto res = h::run_experiment(config);
  std::cout << "wrote " << res.directory.string() << " (" << config.repetition_count()
            << " runs, K=" << config.outer.K << ")\n";
  if (res.fit) {
    std::cout << "fit: factor " << res.fit->factor << ", plateau " << res.fit->plateau << "\n";
  }
  for (const auto& c : res.checks) {
    std::cout << c.name << ": " << c.status;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << "\n";
  }
  return res.exit_code;
}

int do_sweep(const std::string& config_path, const std::string& param,
             const std::vector<double>& values) {
  const auto config = h::load_config(config_path);
  const auto res = h::run_sweep(config, param, values);
  std::cout << "wrote " << (res.directory / "sweep_summary.csv").string() << "\n";
  for (const auto& p : res.points) {
    std::cout << param << "=" << p.value << ": final mean dist^2 " << p.final_mean_dist_sq
              << ", plateau " << p.plateau << ", exit " << p.exit_code << "\n";
  }
  return res.exit_code;
}

int do_verify(const std::string& name) {
  const auto result = moreau::checks::run_named(name);
  if (!result) {
    std::cerr << "error: unknown check '" << name << "'\n";
    return 1;
  }
  for (const auto& line : result->lines) std::cout << "  " << line << "\n";
  std::printf("%s: %s (%.2f s)\n", result->name.c_str(), result->passed ? "PASS" : "FAIL",
              result->seconds);
  return result->passed ? 0 : 1;
}

int do_counterexample(const std::string& kind, double alpha) {
  const auto verdict = h::write_counterexample(kind, alpha);
  std::cout << verdict.dump(2) << "\n";
  return 0;
}

int do_export(const std::string& dir) {
  const int n = h::export_index(dir);
  std::cout << "indexed " << n << " artifacts in " << dir << "/index.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moreau-envelope meta-learning: experiments and numerical checks"};
  app.require_subcommand(1);
  app.footer("Output root: $MOREAU_OUT (default: current directory).");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run one experiment from a TOML config");
  run->add_option("config", config_path, "experiment config")->required()->check(CLI::ExistingFile);

  std::string param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "run an experiment for several values of one field");
  sweep->add_option("--param", param, "field to vary (alpha, beta, tau, K, steps, delta, ...)")
      ->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
  sweep->add_option("config", config_path, "experiment config")
      ->required()
      ->check(CLI::ExistingFile);

  std::string check_name;
  auto* verify = app.add_subcommand("verify", "run a self-contained numerical check");
  std::vector<std::string> check_names;
  for (auto n : moreau::checks::names()) check_names.emplace_back(n);
  verify->add_option("check", check_name, "check name")
      ->required()
      ->check(CLI::IsMember(check_names));

  std::string kind;
  double alpha = 0.1;
  auto* counter = app.add_subcommand("counterexample", "1-D landscape certificates");
  counter->add_option("kind", kind, "nonconvex | nonsmooth")
      ->required()
      ->check(CLI::IsMember({"nonconvex", "nonsmooth"}));
  counter->add_option("--alpha", alpha, "envelope parameter")->required();

  std::string dir;
  auto* exp = app.add_subcommand("export", "index experiment artifacts under a directory");
  exp->add_option("--dir", dir, "directory to index")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return do_run(config_path);
    if (*sweep) return do_sweep(config_path, param, values);
    if (*verify) return do_verify(check_name);
    if (*counter) return do_counterexample(kind, alpha);
    if (*exp) return do_export(dir);
  } catch (const moreau::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
