#pragma once

#include "moreau/algorithms.hpp"
#include "moreau/tasks.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace moreau::harness {

/// One experiment: a suite, an envelope parameter, an outer method and the
/// number of independent repetitions.
///
///   alpha = 0.1
///   repetitions = 4          # or seeds = [3, 5, 8]
///   base_seed = 1
///   checks = ["thm54"]
///   [suite]  family, n, d, mu, L, spread, samples_per_task, reg, seed
///   [outer]  method, beta, tau, K, x0 (optional)
///   [inner]  kind, steps, delta, gamma (optional), delta_ref, step_cap
struct ExperimentConfig {
  SuiteDescriptor suite;
  double alpha = 0.1;
  OuterSpec outer;  // outer.seed is replaced by the repetition seed
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;  // explicit list overrides base_seed + index
  std::vector<std::string> checks;   // thm41 | thm42 | thm54 | thm56
  std::string output_dir = "run";
  int snapshot_stride = 0;
  bool timing = false;     // false writes wall_ns = 0
  int variance_probes = 64;  // points used to estimate the thm56 variance bound

  /// Seed of repetition r.
  std::vector<std::uint64_t> repetition_seeds() const;
  int repetition_count() const;
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

inline constexpr std::string_view kKnownChecks[] = {"thm41", "thm42", "thm54", "thm56"};

ExperimentConfig parse_config(std::string_view toml_text);
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a of the canonical serialization, 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace moreau::harness
