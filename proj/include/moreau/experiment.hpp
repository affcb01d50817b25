#pragma once

#include "moreau/algorithms.hpp"
#include "moreau/config.hpp"
#include "moreau/ground_truth.hpp"
#include "moreau/theory.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moreau::harness {

inline constexpr std::string_view kSchemaVersion = "v1";
inline constexpr std::string_view kRunCsvHeader =
    "run_id,k,dist_sq,F_val,grad_norm_sq,mean_cert_err,wall_ns";
inline constexpr std::string_view kSummaryCsvHeader =
    "k,repetitions,mean_dist_sq,se_dist_sq,mean_F_val,se_F_val,mean_grad_norm_sq,"
    "se_grad_norm_sq,min_mean_grad_norm_sq,mean_cert_err";
inline constexpr std::string_view kSweepCsvHeader =
    "param,value,exit_code,final_mean_dist_sq,plateau,factor,bias_dist,x_star_dist_final";
inline constexpr std::string_view kStatusPass = "pass";
inline constexpr std::string_view kStatusFail = "fail";
inline constexpr std::string_view kStatusSkipped = "precondition-unsatisfied, skipped";
inline constexpr std::string_view kStatusNotApplicable = "not-applicable";

/// Output root: $MOREAU_OUT if set, else the current directory.
std::filesystem::path output_root();

/// Inner-oracle accuracy delta of a configured method, in the sense of
/// |(x - z)/alpha - grad F(x)| <= delta |grad F(x)|:
/// exact 0, fo-maml alpha L, fixed-point (alpha L)^s, fixed-point with
/// gamma != alpha (gamma L)^s + |alpha - gamma| L, to-delta its delta.
double effective_delta(const OuterSpec& outer, double alpha, double L);

/// Mean/SE across repetitions at each k.
struct SummaryRow {
  long long k = 0;
  int repetitions = 0;
  MeanSe dist_sq;
  MeanSe F_val;
  MeanSe grad_norm_sq;
  double min_mean_grad_norm_sq = 0.0;  // min over t <= k of the mean
  double mean_cert_err = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<Trajectory>& runs);

struct CheckOutcome {
  std::string name;
  std::string status;  // one of the kStatus* strings
  std::string detail;
  std::vector<long long> violated_k;
  double worst_ratio = 0.0;  // max over k of observed / (bound + 3 SE)
};

struct ExperimentResult {
  int exit_code = 0;  // 0 iff every enabled check passes or is skipped
  std::filesystem::path directory;
  GroundTruth ground_truth;
  theory::TheoryReport report;
  std::vector<Trajectory> runs;
  std::vector<SummaryRow> summary;
  std::vector<CheckOutcome> checks;
  std::optional<double> sigma_sq_estimate;  // thm56 only
  std::optional<RateFit> fit;              // fit on the mean distance column
};

struct ExperimentOptions {
  bool write_files = true;
  bool parallel = true;  // repetitions concurrently
};

/// Runs every repetition, then writes <root>/<output_dir>/
///   runs/run_<id>.csv, summary.csv, metadata.json.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& root = output_root(),
                                const ExperimentOptions& options = {});

/// Evaluates the configured checks against an already summarized experiment.
std::vector<CheckOutcome> evaluate_checks(const ExperimentConfig& config, const TaskSuite& suite,
                                          const GroundTruth& gt,
                                          const std::vector<SummaryRow>& summary,
                                          std::optional<double> sigma_sq);

/// Returns a copy with one scalar field replaced. Supported names: alpha,
/// beta, tau, K, steps, delta, gamma, n, d, mu, L, spread, reg, repetitions.
ExperimentConfig with_param(const ExperimentConfig& config, std::string_view param, double value);

struct SweepPoint {
  double value = 0.0;
  int exit_code = 0;
  double final_mean_dist_sq = 0.0;
  double plateau = 0.0;
  double factor = 0.0;     // NaN when no pre-plateau segment exists
  double bias_dist = 0.0;  // |x_inf - x*| when defined, NaN otherwise
  double x_star_dist_final = 0.0;  // sqrt of final_mean_dist_sq
};

struct SweepResult {
  int exit_code = 0;  // max over points
  std::vector<SweepPoint> points;
  std::filesystem::path directory;
};

/// Each point runs in <root>/<output_dir>/<param>_<value>; points run
/// concurrently and sweep_summary.csv is written after all finish.
SweepResult run_sweep(const ExperimentConfig& config, std::string_view param,
                      const std::vector<double>& values,
                      const std::filesystem::path& root = output_root());

/// Writes <dir>/index.json listing every experiment, sweep and counterexample
/// artifact found below dir. Returns the number of entries.
int export_index(const std::filesystem::path& dir);

/// Writes <root>/counterexample/<kind>_alpha_<a>.csv and .json. kind is
/// "nonconvex" or "nonsmooth". Returns the JSON verdict block.
nlohmann::json write_counterexample(std::string_view kind, double alpha,
                                    const std::filesystem::path& root = output_root());

std::string git_revision();

}  // namespace moreau::harness
