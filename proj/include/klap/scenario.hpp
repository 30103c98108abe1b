#pragma once

#include <optional>
#include <string>
#include <vector>

#include "klap/kernels.hpp"
#include "klap/solver.hpp"

namespace klap {

// Parsed scenario document. Strict schema: a versioned top-level
// "klap_config": 1 field and no unknown keys anywhere.
struct ScenarioConfig {
  explicit ScenarioConfig(CorruptionKernel k) : kernel(std::move(k)) {}

  CorruptionKernel kernel;      // as declared (before any floor)
  double support_floor_eps = 0.0;

  std::optional<FiniteDistribution> p_data;

  std::optional<FiniteDistribution> prior_vector;
  std::optional<int> prior_sample_count;
  double prior_smoothing = 0.0;

  std::optional<int> noisy_count;  // absent: exact q = T_r p_data
  double noisy_smoothing = 0.0;

  SolverConfig solver;

  std::vector<double> sweep_weights;
  std::vector<int> sweep_clean_counts;
  std::vector<double> sweep_gammas;

  std::optional<int> sample_count;
  double sample_smoothing = 0.0;

  std::string trajectory_path = "trajectory.csv";
  std::string report_path = "report.csv";
  std::string summary_path = "summary.json";
  std::string samples_path = "samples.csv";
  std::string empirical_path = "empirical.csv";

  // Kernel with the configured support floor applied; the solver operates
  // on this one, while samples are drawn from the raw kernel.
  CorruptionKernel solver_kernel() const;
};

// Parses and validates a config document. `base_dir` resolves relative
// kernel file paths. Parse errors carry a "line N:" prefix; validation
// errors name the offending key path. Both throw ConfigError.
ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& base_dir);

}  // namespace klap
