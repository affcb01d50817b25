#include "moreau/algorithms.hpp"
#include "moreau/config.hpp"
#include "moreau/experiment.hpp"
#include "moreau/ground_truth.hpp"
#include "moreau/rng.hpp"
#include "moreau/toml_lite.hpp"

#include "support.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace moreau;
using namespace moreau::harness;
using test_support::biased_pair;
using test_support::code_of;
using test_support::scalar_quadratic;
using test_support::vec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("moreau_test_" + tag + "_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

TaskSuite symmetric_pair() {
  SuiteDescriptor d;
  d.n = 2;
  return TaskSuite(d, {scalar_quadratic(1.0, 1.0), scalar_quadratic(1.0, -1.0)});
}

constexpr const char* kThm54Config = R"(
alpha = 0.4
repetitions = 1
base_seed = 3
checks = ["thm54"]
output_dir = "thm54"

[suite]
family = "quadratic"
n = 4
d = 3
mu = 0.1
L = 1.0
spread = 1.0
seed = 11

[outer]
method = "full-gd"
beta = 1.0
tau = 4
K = 200
x0 = [1.0, -1.0, 2.0]

[inner]
kind = "exact"
)";

}  // namespace

TEST_SUITE("toml") {
  TEST_CASE("parse the supported subset") {
    const auto doc = toml::parse(R"(# top comment
a = 1            # trailing comment
b = -2.5e-3
c = "tab\there \"q\""
big = 1_000_000
flags = [true, false]
vals = [
  1.0,
  inf,   # comment inside
  -inf,
]
[t]
x = nan
s = 'literal\n'
)");
    const auto& r = doc.at("");
    CHECK(r.at("a").as_int() == 1);
    CHECK(r.at("b").as_double() == -2.5e-3);
    CHECK(r.at("c").as_string() == "tab\there \"q\"");
    CHECK(r.at("big").as_int() == 1000000);
    CHECK(r.at("flags").as_array().size() == 2);
    const auto& v = r.at("vals").as_array();
    REQUIRE(v.size() == 3);
    CHECK(std::isinf(v[1].as_double()));
    CHECK(v[2].as_double() < 0);
    CHECK(std::isnan(doc.at("t").at("x").as_double()));
    CHECK(doc.at("t").at("s").as_string() == "literal\\n");
    CHECK(r.at("a").as_double() == 1.0);
  }

  TEST_CASE("serialize round trip") {
    toml::Document doc;
    doc[""]["x"] = toml::Value{0.1};
    doc[""]["n"] = toml::Value{std::int64_t{-7}};
    doc[""]["s"] = toml::Value{std::string("a\"b\\c")};
    doc["sec"]["arr"] = toml::Value{toml::Array{toml::Value{1.5}, toml::Value{std::int64_t{2}}}};
    doc["sec"]["b"] = toml::Value{true};
    CHECK(toml::parse(toml::serialize(doc)) == doc);
  }

  TEST_CASE("format_double round trips and reads as a float") {
    Rng r(1);
    for (int i = 0; i < 2000; ++i) {
      const double v = std::ldexp(r.normal(), static_cast<int>(r.below(200)) - 100);
      const std::string s = toml::format_double(v);
      CHECK(toml::parse("v = " + s).at("").at("v").as_double() == v);
    }
    CHECK(toml::format_double(3.0) == "3.0");
    CHECK(toml::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(toml::format_double(std::nan("")) == "nan");
  }

  TEST_CASE("malformed input is rejected") {
    for (const char* bad : {"a = ", "a = [1, 2", "[t", "a = \"open", "= 3", "a = 1 2", "a = 1\na = 2"})
      CHECK(code_of([&] { toml::parse(bad); }) == ErrorCode::kInvalidConfig);
  }
}

TEST_SUITE("config") {
  TEST_CASE("parse, serialize and hash") {
    const auto c = parse_config(kThm54Config);
    CHECK(c.alpha == 0.4);
    CHECK(c.suite.n == 4);
    CHECK(c.outer.method == Method::kFullGd);
    CHECK(c.outer.inner.kind == InnerKind::kExact);
    REQUIRE(c.outer.x0.has_value());
    CHECK((*c.outer.x0)[2] == 2.0);
    CHECK(c.repetition_seeds() == std::vector<std::uint64_t>{3});
    CHECK(c.checks == std::vector<std::string>{"thm54"});
    const auto again = parse_config(serialize_config(c));
    CHECK(again == c);
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    CHECK(config_hash(with_param(c, "beta", 0.5)) != config_hash(c));
  }

  TEST_CASE("explicit seeds and large seeds") {
    const auto c = parse_config("seeds = [5, 9, 9223372036854775807]\n[outer]\nK = 1\n");
    CHECK(c.repetition_count() == 3);
    CHECK(c.repetition_seeds()[2] == 9223372036854775807ull);
    CHECK(parse_config(serialize_config(c)) == c);
    const auto d = parse_config("repetitions = 3\nbase_seed = 10\n");
    CHECK(d.repetition_seeds() == std::vector<std::uint64_t>{10, 11, 12});
  }

  TEST_CASE("invalid configs") {
    for (const char* bad : {"bogus = 1\n", "[nope]\nx = 1\n", "[suite]\nfamily = \"cubic\"\n",
                            "alpha = -1\n", "checks = [\"thm99\"]\n", "[outer]\ntau = 5\n",
                            "[suite]\nd = 2\n[outer]\nx0 = [1.0]\n", "repetitions = 0\n",
                            "[outer]\nmethod = \"fo-muml\"\n[inner]\nkind = \"to-delta\"\ndelta = 0.1\ndelta_ref = 0.01\n"})
      CHECK(code_of([&] { parse_config(bad); }) == ErrorCode::kInvalidConfig);
    CHECK(code_of([] { load_config("/nonexistent/moreau.toml"); }) == ErrorCode::kIo);
  }

  TEST_CASE("with_param") {
    const auto c = parse_config(kThm54Config);
    CHECK(with_param(c, "alpha", 0.2).alpha == 0.2);
    CHECK(with_param(c, "K", 50).outer.K == 50);
    CHECK(with_param(c, "gamma", 0.3).outer.inner.gamma == 0.3);
    CHECK(with_param(c, "n", 6).suite.n == 6);
    CHECK(code_of([&] { with_param(c, "colour", 1); }) == ErrorCode::kInvalidConfig);
  }
}

TEST_SUITE("ground-truth") {
  TEST_CASE("symmetric pair: x* = 0 and sigma*^2 = 1/(1+alpha)^2") {
    for (double a : {0.1, 0.5, 2.0}) {
      const auto gt = solve_ground_truth(symmetric_pair(), a);
      CHECK(std::abs(gt.x_star[0]) <= 1e-15);
      CHECK(gt.sigma_star_sq == doctest::Approx(1 / ((1 + a) * (1 + a))).epsilon(1e-13));
      CHECK(gt.grad_norm <= 1e-9);
      if (a < 1) CHECK(std::abs(bias_fixed_point(symmetric_pair(), a, 0.5)[0]) <= 1e-15);
    }
  }

  TEST_CASE("biased pair: closed-form optimum and FO-MAML fixed point") {
    for (double a : {0.05, 0.1, 0.2}) {
      const auto gt = solve_ground_truth(biased_pair(), a);
      CHECK(gt.x_star[0] == doctest::Approx(6 * (1 + a) / (3 + 4 * a)).epsilon(1e-13));
      CHECK(bias_fixed_point(biased_pair(), a, 0.2)[0] ==
            doctest::Approx(6 * (1 - 2 * a) / (3 - 5 * a)).epsilon(1e-13));
    }
    CHECK(solve_ground_truth(biased_pair(), 0.1).x_star[0] == doctest::Approx(1.941176).epsilon(1e-6));
    CHECK(bias_fixed_point(biased_pair(), 0.1, 0.2)[0] == doctest::Approx(1.92));
    const double bias = 1.941176470588 - 1.92;
    CHECK(bias == doctest::Approx(0.02118).epsilon(1e-3));
    CHECK(code_of([] { bias_fixed_point(biased_pair(), 0.1, 5.0); }) == ErrorCode::kNonContraction);
  }

  TEST_CASE("spread-zero suite has zero sigma*^2") {
    const auto s = make_quadratic_suite(5, 3, 0.2, 1.0, 0.0, 4);
    CHECK(solve_ground_truth(s, 0.3).sigma_star_sq <= 1e-28);
  }

  TEST_CASE("random quadratic suites solve to tolerance") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = make_quadratic_suite(6, 5, 0.01, 1.0, 2.0, seed);
      const auto gt = solve_ground_truth(s, 0.3);
      CHECK(gt.grad_norm <= 1e-9);
      CHECK(gt.sigma_star_sq == doctest::Approx(mean_squared_task_gradient(s, gt.x_star, 0.3)));
      CHECK(task_gradient_variance(s, gt.x_star, 0.3) == doctest::Approx(gt.sigma_star_sq));
      REQUIRE(gt.kappa.has_value());
      CHECK(*gt.kappa == doctest::Approx(100.0));
      CHECK_FALSE(gt.numerical);
    }
  }

  TEST_CASE("numerical ground truth agrees with the linear solve") {
    const auto s = make_quadratic_suite(4, 3, 0.2, 1.0, 1.0, 9);
    const auto a = solve_ground_truth(s, 0.3);
    const auto b = numerical_ground_truth(s, 0.3);
    CHECK(b.numerical);
    CHECK((a.x_star - b.x_star).norm() <= 1e-10);
    const auto lg = make_logistic_suite(4, 3, 30, 0.05, 9);
    CHECK(code_of([&] { solve_ground_truth(lg, 0.3); }) == ErrorCode::kNotClosedForm);
    const auto gl = ground_truth(lg, 0.3);
    CHECK(gl.numerical);
    CHECK(gl.grad_norm <= 1e-11);
  }

  TEST_CASE("fit_rate") {
    std::vector<double> flat(50, 0.7);
    const auto c = fit_rate(flat);
    CHECK(c.factor == 1.0);
    CHECK(c.plateau == 0.7);

    const auto s = TaskSuite(SuiteDescriptor{}, {scalar_quadratic(2.0, 0.0)});
    const double alpha = 0.25, beta = 0.2, mu_F = 2.0 / 1.5;
    RunOptions o;
    o.x_star = vec({0.0});
    o.timing = false;
    const auto gd = run_full_gd(s, vec({1.0}), alpha, beta, 200, o);
    CHECK(fit_rate(gd).factor == doctest::Approx(std::pow(1 - beta * mu_F, 2)).epsilon(1e-6));

    o.x_star = solve_ground_truth(biased_pair(), 0.1).x_star;
    const auto fo = run_fo_maml(biased_pair(), vec({0.0}), 0.1, 0.2, 2, 400, 0, o);
    const double bias = 6 * 1.1 / 3.4 - 4.8 / 2.5;
    CHECK(std::abs(fit_rate(fo).plateau - bias * bias) <= 1e-8);

    CHECK(code_of([] { fit_rate(std::vector<double>{}); }) == ErrorCode::kInsufficientDecay);
    std::vector<double> bump(40, 1.0);
    bump[0] = 5.0;
    CHECK(code_of([&] { fit_rate(bump); }) == ErrorCode::kInsufficientDecay);
  }

  TEST_CASE("plateau and mean_se") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i;
    CHECK(plateau_level(v) == doctest::Approx(94.5));
    CHECK(plateau_level(std::vector<double>{3.0}) == 3.0);
    const auto m = mean_se(std::vector<double>{1, 2, 3, 4});
    CHECK(m.mean == 2.5);
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2));
    CHECK(mean_se(std::vector<double>{2.0}).se == 0.0);
  }
}

TEST_SUITE("experiment") {
  TEST_CASE("effective delta") {
    OuterSpec o;
    o.method = Method::kFoMaml;
    CHECK(effective_delta(o, 0.2, 2.0) == doctest::Approx(0.4));
    o.method = Method::kFullGd;
    CHECK(effective_delta(o, 0.2, 2.0) == 0.0);
    o.method = Method::kFoMuml;
    o.inner = InnerSolverSpec::fixed_point(3);
    CHECK(effective_delta(o, 0.2, 2.0) == doctest::Approx(std::pow(0.4, 3)));
    o.inner = InnerSolverSpec::fixed_point(2, 0.1);
    CHECK(effective_delta(o, 0.2, 2.0) == doctest::Approx(0.04 + 0.2));
    o.inner = InnerSolverSpec::to_delta(0.05, 1e-6);
    CHECK(effective_delta(o, 0.2, 2.0) == 0.05);
  }

  TEST_CASE("conforming deterministic run passes and is byte-stable") {
    TempDir tmp("thm54");
    const auto c = parse_config(kThm54Config);
    const auto a = run_experiment(c, tmp.path / "a");
    const auto b = run_experiment(c, tmp.path / "b");
    CHECK(a.exit_code == 0);
    REQUIRE(a.checks.size() == 1);
    CHECK(a.checks[0].status == kStatusPass);
    const fs::path da = tmp.path / "a" / "thm54", db = tmp.path / "b" / "thm54";
    CHECK(slurp(da / "runs" / "run_0.csv") == slurp(db / "runs" / "run_0.csv"));
    CHECK(slurp(da / "summary.csv") == slurp(db / "summary.csv"));

    std::istringstream run(slurp(da / "runs" / "run_0.csv"));
    std::string line;
    std::getline(run, line);
    CHECK(line == kRunCsvHeader);
    int rows = 0;
    while (std::getline(run, line)) ++rows;
    CHECK(rows == c.outer.K + 1);
    std::istringstream sum(slurp(da / "summary.csv"));
    std::getline(sum, line);
    CHECK(line == kSummaryCsvHeader);

    const auto meta = nlohmann::json::parse(slurp(da / "metadata.json"));
    CHECK(meta["schema"] == "v1");
    CHECK(meta["config_hash"] == config_hash(c));
    CHECK(meta.contains("git_revision"));
    CHECK(meta["exit_code"] == 0);
    CHECK(meta["ground_truth"].contains("x_star"));
    CHECK(meta["theory_report"]["rates"].size() == 3);
    CHECK(parse_config(meta["config"].get<std::string>()) == c);
  }

  TEST_CASE("precondition violation is skipped with exit 0") {
    auto c = parse_config(kThm54Config);
    c.alpha = 0.9;
    const auto r = run_experiment(c, fs::temp_directory_path(), {.write_files = false});
    CHECK(r.exit_code == 0);
    REQUIRE(r.checks.size() == 1);
    CHECK(r.checks[0].status == kStatusSkipped);
  }

  TEST_CASE("violated bound exits 2") {
    auto c = parse_config(kThm54Config);
    c.checks = {"thm41"};
    c.outer.method = Method::kFoMaml;
    c.outer.beta = 0.01;
    c.alpha = 0.01;
    c.suite.spread = 0.0;
    c.outer.K = 5;
    const auto ok = run_experiment(c, fs::temp_directory_path(), {.write_files = false});
    CHECK(ok.checks[0].status == kStatusPass);

    auto m = c;
    m.outer.method = Method::kFoMuml;
    m.outer.inner = InnerSolverSpec::fixed_point(2);
    const auto na = run_experiment(m, fs::temp_directory_path(), {.write_files = false});
    CHECK(na.checks[0].status == kStatusNotApplicable);
    CHECK(na.exit_code == 0);

    std::vector<SummaryRow> rows(2);
    for (int k = 0; k < 2; ++k) {
      rows[k].k = k;
      rows[k].repetitions = 1;
    }
    rows[0].dist_sq.mean = 1.0;
    rows[1].dist_sq.mean = 1e6;
    const auto suite = make_suite(c.suite);
    const auto gt = solve_ground_truth(suite, c.alpha);
    const auto out = evaluate_checks(c, suite, gt, rows, std::nullopt);
    CHECK(out[0].status == kStatusFail);
    CHECK(out[0].violated_k == std::vector<long long>{1});
  }

  TEST_CASE("serial and parallel repetitions agree") {
    auto c = parse_config(kThm54Config);
    c.outer.method = Method::kFoMaml;
    c.outer.tau = 2;
    c.outer.beta = 0.05;
    c.repetitions = 6;
    c.checks.clear();
    const auto a = run_experiment(c, fs::temp_directory_path(), {.write_files = false, .parallel = true});
    const auto b = run_experiment(c, fs::temp_directory_path(), {.write_files = false, .parallel = false});
    REQUIRE(a.runs.size() == 6);
    for (int r = 0; r < 6; ++r) CHECK(a.runs[r].x_final == b.runs[r].x_final);
    CHECK(a.summary.back().dist_sq.mean == b.summary.back().dist_sq.mean);
  }

  TEST_CASE("summarize") {
    Trajectory t1, t2;
    for (int k = 0; k < 3; ++k) {
      Record r;
      r.k = k;
      r.dist_sq = k + 1.0;
      r.grad_norm_sq = 3.0 - k;
      t1.records.push_back(r);
      r.dist_sq = k + 3.0;
      r.grad_norm_sq = 1.0;
      t2.records.push_back(r);
    }
    const auto s = summarize({t1, t2});
    REQUIRE(s.size() == 3);
    CHECK(s[0].dist_sq.mean == 2.0);
    CHECK(s[0].dist_sq.se == doctest::Approx(1.0));
    CHECK(s[2].repetitions == 2);
    CHECK(s[0].min_mean_grad_norm_sq == 2.0);
    CHECK(s[2].min_mean_grad_norm_sq == 1.0);
  }

  TEST_CASE("sweep, counterexample artifacts and export") {
    TempDir tmp("sweep");
    auto c = parse_config(kThm54Config);
    c.output_dir = "sw";
    c.outer.K = 20;
    const auto s = run_sweep(c, "alpha", {0.1, 0.2}, tmp.path);
    REQUIRE(s.points.size() == 2);
    CHECK(s.exit_code == 0);
    const auto sweep_csv = slurp(tmp.path / "sw" / "sweep_summary.csv");
    CHECK(sweep_csv.rfind(std::string(kSweepCsvHeader), 0) == 0);
    CHECK(fs::exists(tmp.path / "sw" / "alpha_0.1" / "metadata.json"));

    const auto v = write_counterexample("nonconvex", 0.1, tmp.path);
    CHECK(v["verdict"] == "NOT-CERTIFIED");
    const auto w = write_counterexample("nonsmooth", 1.0, tmp.path);
    CHECK(w["kind"] == "nonsmooth");
    bool csv_found = false;
    for (const auto& e : fs::directory_iterator(tmp.path / "counterexample")) {
      if (e.path().extension() == ".csv" && e.path().filename().string().rfind("nonconvex", 0) == 0) {
        csv_found = true;
        std::istringstream in(slurp(e.path()));
        std::string header;
        std::getline(in, header);
        CHECK(header == "x,z,phi,phi2_closed,phi2_fd");
      }
    }
    CHECK(csv_found);
    CHECK(code_of([&] { write_counterexample("wiggly", 1.0, tmp.path); }) == ErrorCode::kInvalidConfig);

    const int n = export_index(tmp.path);
    CHECK(n >= 5);
    const auto idx = nlohmann::json::parse(slurp(tmp.path / "index.json"));
    CHECK(idx["schema"] == "v1");
  }
}
