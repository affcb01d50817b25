#include "moreau/experiment.hpp"

#include "moreau/counterexamples.hpp"
#include "moreau/error.hpp"
#include "moreau/kernels.hpp"
#include "moreau/rng.hpp"
#include "moreau/toml_lite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef MOREAU_GIT_REVISION
#define MOREAU_GIT_REVISION "unknown"
#endif

namespace moreau::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return toml::format_double(v); }

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json_gt(const GroundTruth& gt) {
  json j = {{"x_star", vec_json(gt.x_star)},
            {"F_star", gt.F_star},
            {"sigma_star_sq", gt.sigma_star_sq},
            {"grad_norm", gt.grad_norm},
            {"L_F", gt.L_F},
            {"mu_F", gt.mu_F},
            {"numerical", gt.numerical}};
  j["kappa"] = gt.kappa ? json(*gt.kappa) : json(nullptr);
  j["x_infinity"] = gt.x_infinity ? vec_json(*gt.x_infinity) : json(nullptr);
  return j;
}

json to_json_check(const CheckOutcome& c) {
  return {{"name", c.name},
          {"status", c.status},
          {"detail", c.detail},
          {"violated_k", c.violated_k},
          {"worst_ratio", c.worst_ratio}};
}

bool is_one_alpha_step(const OuterSpec& outer, double alpha) {
  if (outer.method == Method::kFoMaml) return true;
  return outer.method == Method::kFoMuml && outer.inner.kind == InnerKind::kFixedPoint &&
         outer.inner.steps == 1 && outer.inner.gamma_or(alpha) == alpha;
}

int batch_size(const OuterSpec& outer, int n) {
  return outer.method == Method::kFullGd ? n : outer.tau;
}

std::string run_csv(int run_id, const Trajectory& t) {
  std::ostringstream os;
  os << kRunCsvHeader << '\n';
  for (const auto& r : t.records) {
    os << run_id << ',' << r.k << ',' << num(r.dist_sq) << ',' << num(r.F_val) << ','
       << num(r.grad_norm_sq) << ',' << num(r.mean_cert_err) << ',' << r.wall_ns << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << kSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.k << ',' << r.repetitions << ',' << num(r.dist_sq.mean) << ',' << num(r.dist_sq.se)
       << ',' << num(r.F_val.mean) << ',' << num(r.F_val.se) << ',' << num(r.grad_norm_sq.mean)
       << ',' << num(r.grad_norm_sq.se) << ',' << num(r.min_mean_grad_norm_sq) << ','
       << num(r.mean_cert_err) << '\n';
  }
  return os.str();
}

// sigma^2 for the nonconvex bound: twice the largest task-gradient variance
// seen at x^0, x*, the final iterates and random points around x*.
double estimate_variance_bound(const ExperimentConfig& config, const TaskSuite& suite,
                               const GroundTruth& gt, const std::vector<Trajectory>& runs) {
  const Vector x0 = config.outer.x0.value_or(Vector::Zero(suite.dimension()));
  std::vector<Vector> probes{x0, gt.x_star};
  for (const auto& t : runs) probes.push_back(t.x_final);
  const double radius = 1.5 * std::max(1.0, (x0 - gt.x_star).norm());
  Rng rng = Rng::stream(config.base_seed, 0x5eedULL << 32);
  for (int p = 0; p < config.variance_probes; ++p) {
    Vector u(suite.dimension());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.normal();
    const double norm = u.norm();
    if (norm > 0.0) u /= norm;
    probes.push_back(gt.x_star + radius * rng.uniform() * u);
  }
  const auto values = kernels::map_indices<double>(
      static_cast<int>(probes.size()), [&](int i) {
        return task_gradient_variance(suite, probes[static_cast<std::size_t>(i)], config.alpha);
      });
  return 2.0 * *std::max_element(values.begin(), values.end());
}

CheckOutcome rate_check(const theory::RateBound& b, const std::vector<SummaryRow>& summary) {
  CheckOutcome out;
  out.name = b.check;
  if (!b.precondition_ok) {
    out.status = kStatusSkipped;
    out.detail = b.precondition;
    return out;
  }
  const double d0 = summary.front().dist_sq.mean;
  for (const auto& row : summary) {
    const double bound = b.at(row.k, d0);
    const double limit = bound + 3.0 * row.dist_sq.se + 1e-12 * std::max(1.0, bound);
    const double ratio = row.dist_sq.mean / limit;
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (!(row.dist_sq.mean <= limit)) out.violated_k.push_back(row.k);
  }
  out.status = out.violated_k.empty() ? kStatusPass : kStatusFail;
  std::ostringstream os;
  os << "factor " << b.factor << ", radius " << b.radius << ", worst ratio " << out.worst_ratio;
  if (!out.violated_k.empty()) {
    os << ", violated at k =";
    for (std::size_t i = 0; i < std::min<std::size_t>(out.violated_k.size(), 10); ++i) {
      os << ' ' << out.violated_k[i];
    }
    if (out.violated_k.size() > 10) os << " ...";
  }
  out.detail = os.str();
  return out;
}

}  // namespace

fs::path output_root() {
  if (const char* env = std::getenv("MOREAU_OUT"); env != nullptr && *env != '\0') return env;
  return fs::current_path();
}

std::string git_revision() { return MOREAU_GIT_REVISION; }

double effective_delta(const OuterSpec& outer, double alpha, double L) {
  switch (outer.method) {
    case Method::kFoMaml: return alpha * L;
    case Method::kExactProxSgd:
    case Method::kFullGd: return 0.0;
    case Method::kFoMuml: break;
  }
  const InnerSolverSpec& in = outer.inner;
  switch (in.kind) {
    case InnerKind::kExact: return 0.0;
    case InnerKind::kToDelta: return in.delta;
    case InnerKind::kFixedPoint: {
      const double gamma = in.gamma_or(alpha);
      if (gamma == alpha) return std::pow(alpha * L, in.steps);
      return theory::mismatched_step_bound(alpha, gamma, L, in.steps);
    }
  }
  return kNan;
}

std::vector<SummaryRow> summarize(const std::vector<Trajectory>& runs) {
  std::vector<SummaryRow> rows;
  if (runs.empty()) return rows;
  const std::size_t K1 = runs.front().records.size();
  double running_min = std::numeric_limits<double>::infinity();
  std::vector<double> d(runs.size()), f(runs.size()), g(runs.size());
  for (std::size_t k = 0; k < K1; ++k) {
    double cert = 0.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const Record& rec = runs[r].records[k];
      d[r] = rec.dist_sq;
      f[r] = rec.F_val;
      g[r] = rec.grad_norm_sq;
      cert += rec.mean_cert_err;
    }
    SummaryRow row;
    row.k = runs.front().records[k].k;
    row.repetitions = static_cast<int>(runs.size());
    row.dist_sq = mean_se(d);
    row.F_val = mean_se(f);
    row.grad_norm_sq = mean_se(g);
    running_min = std::min(running_min, row.grad_norm_sq.mean);
    row.min_mean_grad_norm_sq = running_min;
    row.mean_cert_err = cert / static_cast<double>(runs.size());
    rows.push_back(row);
  }
  return rows;
}

std::vector<CheckOutcome> evaluate_checks(const ExperimentConfig& config, const TaskSuite& suite,
                                          const GroundTruth& gt,
                                          const std::vector<SummaryRow>& summary,
                                          std::optional<double> sigma_sq) {
  const double L = suite.smoothness();
  const double mu = suite.strong_convexity();
  const double alpha = config.alpha;
  const double beta = config.outer.beta;
  const double tau = batch_size(config.outer, suite.size());
  const double delta = effective_delta(config.outer, alpha, L);

  std::vector<CheckOutcome> out;
  for (const auto& name : config.checks) {
    if (name == "thm41") {
      if (!is_one_alpha_step(config.outer, alpha)) {
        out.push_back({name, std::string(kStatusNotApplicable), "needs one inner step of size alpha",
                       {}, 0.0});
        continue;
      }
      out.push_back(rate_check(theory::rate_thm41(L, mu, alpha, beta, tau, gt.sigma_star_sq),
                               summary));
    } else if (name == "thm42") {
      out.push_back(
          rate_check(theory::rate_thm42(L, mu, alpha, beta, tau, delta, gt.sigma_star_sq),
                     summary));
    } else if (name == "thm54") {
      out.push_back(
          rate_check(theory::rate_thm54(L, mu, alpha, beta, tau, delta, gt.sigma_star_sq),
                     summary));
    } else if (name == "thm56") {
      CheckOutcome c;
      c.name = name;
      if (!sigma_sq || summary.size() < 2) {
        c.status = kStatusNotApplicable;
        c.detail = "needs a variance estimate and K >= 1";
        out.push_back(c);
        continue;
      }
      const double gap = std::max(0.0, summary.front().F_val.mean - gt.F_star);
      const auto first = theory::rate_thm56(L, alpha, beta, tau, delta, *sigma_sq, gap, 1);
      if (!first.precondition_ok) {
        c.status = kStatusSkipped;
        c.detail = first.precondition;
        out.push_back(c);
        continue;
      }
      std::size_t argmin = 0;
      for (std::size_t k = 1; k < summary.size(); ++k) {
        if (summary[k].grad_norm_sq.mean < summary[argmin].grad_norm_sq.mean) argmin = k;
        const auto b = theory::rate_thm56(L, alpha, beta, tau, delta, *sigma_sq, gap, summary[k].k);
        const double limit =
            b.bound + 3.0 * summary[argmin].grad_norm_sq.se + 1e-12 * std::max(1.0, b.bound);
        const double observed = summary[k].min_mean_grad_norm_sq;
        c.worst_ratio = std::max(c.worst_ratio, observed / limit);
        if (!(observed <= limit)) c.violated_k.push_back(summary[k].k);
      }
      c.status = c.violated_k.empty() ? kStatusPass : kStatusFail;
      std::ostringstream os;
      os << "sigma^2 " << *sigma_sq << ", F(x0) - F* " << gap << ", worst ratio " << c.worst_ratio;
      c.detail = os.str();
      out.push_back(c);
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& root,
                                const ExperimentOptions& options) {
  config.validate();
  const TaskSuite suite = make_suite(config.suite);
  ExperimentResult res;
  res.directory = root / config.output_dir;
  res.ground_truth = ground_truth(suite, config.alpha);
  GroundTruth& gt = res.ground_truth;
  if (suite.all_quadratic() && batch_size(config.outer, suite.size()) == suite.size() &&
      is_one_alpha_step(config.outer, config.alpha)) {
    try {
      gt.x_infinity = bias_fixed_point(suite, config.alpha, config.outer.beta);
    } catch (const Error& e) {
      warn(e.what());
    }
  }

  const auto seeds = config.repetition_seeds();
  RunOptions run_options;
  run_options.x_star = gt.x_star;
  run_options.snapshot_stride = config.snapshot_stride;
  run_options.timing = config.timing;
  run_options.parallel = !options.parallel || seeds.size() == 1;
  std::function<Trajectory(int)> one = [&](int r) {
    OuterSpec spec = config.outer;
    spec.seed = seeds[static_cast<std::size_t>(r)];
    return run_outer(suite, config.alpha, spec, run_options);
  };
  const int count = static_cast<int>(seeds.size());
  res.runs = options.parallel ? kernels::map_indices<Trajectory>(count, one)
                              : kernels::map_indices_serial<Trajectory>(count, one);
  res.summary = summarize(res.runs);

  const bool wants_variance =
      std::find(config.checks.begin(), config.checks.end(), "thm56") != config.checks.end();
  if (wants_variance) res.sigma_sq_estimate = estimate_variance_bound(config, suite, gt, res.runs);
  res.checks = evaluate_checks(config, suite, gt, res.summary, res.sigma_sq_estimate);
  for (const auto& c : res.checks) {
    if (c.status == kStatusFail) res.exit_code = 2;
  }

  theory::ReportInputs in;
  in.L = suite.smoothness();
  in.mu = suite.strong_convexity();
  in.convexity = suite.convexity();
  in.alpha = config.alpha;
  in.beta = config.outer.beta;
  in.tau = batch_size(config.outer, suite.size());
  in.delta = effective_delta(config.outer, config.alpha, in.L);
  if (in.mu > 0.0) in.sigma_star_sq = gt.sigma_star_sq;
  in.sigma_sq = res.sigma_sq_estimate;
  in.F0_minus_Fstar = std::max(0.0, res.summary.front().F_val.mean - gt.F_star);
  in.k = std::max(1, config.outer.K);
  res.report = theory::make_report(in);

  std::vector<double> mean_dist;
  for (const auto& row : res.summary) mean_dist.push_back(row.dist_sq.mean);
  try {
    res.fit = fit_rate(mean_dist);
  } catch (const Error&) {
  }

  if (!options.write_files) return res;

  json files = json::array();
  for (int r = 0; r < count; ++r) {
    const std::string name = "runs/run_" + std::to_string(r) + ".csv";
    write_text(res.directory / name, run_csv(r, res.runs[static_cast<std::size_t>(r)]));
    files.push_back(name);
  }
  write_text(res.directory / "summary.csv", summary_csv(res.summary));

  json meta;
  meta["schema"] = kSchemaVersion;
  meta["config_hash"] = config_hash(config);
  meta["git_revision"] = git_revision();
  meta["config"] = serialize_config(config);
  meta["method"] = to_string(config.outer.method);
  meta["alpha"] = config.alpha;
  meta["seeds"] = seeds;
  meta["ground_truth"] = to_json_gt(gt);
  meta["theory_report"] = res.report;
  json checks = json::array();
  for (const auto& c : res.checks) checks.push_back(to_json_check(c));
  meta["checks"] = checks;
  meta["sigma_sq_estimate"] = res.sigma_sq_estimate ? json(*res.sigma_sq_estimate) : json(nullptr);
  meta["fit"] = res.fit ? json{{"factor", res.fit->factor},
                               {"plateau", res.fit->plateau},
                               {"points", res.fit->points}}
                        : json(nullptr);
  meta["files"] = {{"runs", files}, {"summary", "summary.csv"}};
  meta["exit_code"] = res.exit_code;
  write_text(res.directory / "metadata.json", meta.dump(2) + "\n");
  return res;
}

ExperimentConfig with_param(const ExperimentConfig& config, std::string_view param, double value) {
  ExperimentConfig c = config;
  auto as_int = [&]() {
    if (value != std::floor(value) || std::abs(value) > 2e9) {
      throw Error(ErrorCode::kInvalidConfig, std::string(param) + " needs an integer value");
    }
    return static_cast<int>(value);
  };
  if (param == "alpha") c.alpha = value;
  else if (param == "beta") c.outer.beta = value;
  else if (param == "tau") c.outer.tau = as_int();
  else if (param == "K") c.outer.K = as_int();
  else if (param == "steps") c.outer.inner.steps = as_int();
  else if (param == "delta") c.outer.inner.delta = value;
  else if (param == "gamma") c.outer.inner.gamma = value;
  else if (param == "n") c.suite.n = as_int();
  else if (param == "d") c.suite.d = as_int();
  else if (param == "mu") c.suite.mu = value;
  else if (param == "L") c.suite.L = value;
  else if (param == "spread") c.suite.spread = value;
  else if (param == "reg") c.suite.reg = value;
  else if (param == "repetitions") {
    c.repetitions = as_int();
    c.seeds.clear();
  } else {
    throw Error(ErrorCode::kInvalidConfig, "cannot sweep over '" + std::string(param) + "'");
  }
  return c;
}

SweepResult run_sweep(const ExperimentConfig& config, std::string_view param,
                      const std::vector<double>& values, const fs::path& root) {
  if (values.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one value");
  std::vector<ExperimentConfig> points;
  for (double v : values) {
    ExperimentConfig c = with_param(config, param, v);
    c.output_dir = config.output_dir + "/" + std::string(param) + "_" + num(v);
    c.validate();
    points.push_back(std::move(c));
  }
  std::function<SweepPoint(int)> one = [&](int i) {
    const ExperimentResult r = run_experiment(points[static_cast<std::size_t>(i)], root);
    SweepPoint p;
    p.value = values[static_cast<std::size_t>(i)];
    p.exit_code = r.exit_code;
    p.final_mean_dist_sq = r.summary.back().dist_sq.mean;
    p.x_star_dist_final = std::sqrt(p.final_mean_dist_sq);
    std::vector<double> mean_dist;
    for (const auto& row : r.summary) mean_dist.push_back(row.dist_sq.mean);
    p.plateau = plateau_level(mean_dist);
    p.factor = r.fit ? r.fit->factor : kNan;
    p.bias_dist = r.ground_truth.x_infinity
                      ? (*r.ground_truth.x_infinity - r.ground_truth.x_star).norm()
                      : kNan;
    return p;
  };
  SweepResult out;
  out.points = kernels::map_indices<SweepPoint>(static_cast<int>(points.size()), one);
  out.directory = root / config.output_dir;
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (const auto& p : out.points) {
    out.exit_code = std::max(out.exit_code, p.exit_code);
    os << param << ',' << num(p.value) << ',' << p.exit_code << ',' << num(p.final_mean_dist_sq)
       << ',' << num(p.plateau) << ',' << num(p.factor) << ',' << num(p.bias_dist) << ','
       << num(p.x_star_dist_final) << '\n';
  }
  write_text(out.directory / "sweep_summary.csv", os.str());
  return out;
}

int export_index(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> metas, sweeps, counter;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "metadata.json") metas.push_back(entry.path());
    else if (name == "sweep_summary.csv") sweeps.push_back(entry.path());
    else if (entry.path().parent_path().filename() == "counterexample" &&
             entry.path().extension() == ".json") {
      counter.push_back(entry.path());
    }
  }
  std::sort(metas.begin(), metas.end());
  std::sort(sweeps.begin(), sweeps.end());
  std::sort(counter.begin(), counter.end());

  auto read_json = [](const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.string());
    return json::parse(in);
  };
  json index;
  index["schema"] = kSchemaVersion;
  index["experiments"] = json::array();
  index["sweeps"] = json::array();
  index["counterexamples"] = json::array();
  int entries = 0;
  for (const auto& p : metas) {
    const json m = read_json(p);
    if (m.value("schema", "") != kSchemaVersion) {
      warn("skipping " + p.string() + ": schema is not " + std::string(kSchemaVersion));
      continue;
    }
    const fs::path base = fs::relative(p.parent_path(), dir);
    json runs = json::array();
    for (const auto& r : m["files"]["runs"]) runs.push_back((base / r.get<std::string>()).string());
    index["experiments"].push_back({{"directory", base.string()},
                                    {"config_hash", m["config_hash"]},
                                    {"method", m["method"]},
                                    {"alpha", m["alpha"]},
                                    {"runs", runs},
                                    {"summary", (base / "summary.csv").string()},
                                    {"metadata", fs::relative(p, dir).string()},
                                    {"checks", m["checks"]},
                                    {"exit_code", m["exit_code"]}});
    ++entries;
  }
  for (const auto& p : sweeps) {
    index["sweeps"].push_back(fs::relative(p, dir).string());
    ++entries;
  }
  for (const auto& p : counter) {
    const json c = read_json(p);
    index["counterexamples"].push_back({{"json", fs::relative(p, dir).string()},
                                        {"csv", (fs::relative(p.parent_path(), dir) /
                                                 c.value("csv", std::string()))
                                                    .string()},
                                        {"kind", c.value("kind", std::string())},
                                        {"alpha", c.value("alpha", kNan)}});
    ++entries;
  }
  write_text(dir / "index.json", index.dump(2) + "\n");
  return entries;
}

json write_counterexample(std::string_view kind, double alpha, const fs::path& root) {
  namespace cx = counterexamples;
  const fs::path dir = root / "counterexample";
  const std::string stem = std::string(kind) + "_alpha_" + num(alpha);
  std::ostringstream csv;
  csv << "x,z,phi,phi2_closed,phi2_fd\n";
  json verdict;
  if (kind == "nonconvex") {
    const auto report = cx::verify_nonconvexity(alpha);
    for (const auto& g : report.grid) {
      csv << num(g.x) << ',' << num(g.z) << ',' << num(g.phi) << ',' << num(g.phi2_closed) << ','
          << num(g.phi2_fd) << '\n';
    }
    verdict = report;
  } else if (kind == "nonsmooth") {
    const auto report = cx::verify_nonsmoothness(alpha, cx::default_nonsmooth_targets());
    for (const auto& p : report.points) {
      csv << num(p.x) << ',' << num(p.z_target) << ',' << num(p.phi) << ',' << num(p.phi2_closed)
          << ',' << num(p.phi2_fd) << '\n';
    }
    verdict = report;
  } else {
    throw Error(ErrorCode::kInvalidConfig,
                "counterexample kind must be nonconvex or nonsmooth, got '" + std::string(kind) +
                    "'");
  }
  verdict["schema"] = kSchemaVersion;
  verdict["csv"] = stem + ".csv";
  write_text(dir / (stem + ".csv"), csv.str());
  write_text(dir / (stem + ".json"), verdict.dump(2) + "\n");
  return verdict;
}

}  // namespace moreau::harness
