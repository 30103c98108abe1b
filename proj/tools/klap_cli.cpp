// klap: KL ambient-projection solver and experiment runner.
//
// Subcommands: solve, identify, verify, sweep, sample. All file outputs
// are deterministic for a fixed config and seed. Exit codes: 0 success,
// 1 config error, 2 non-convergence, 3 non-identifiable (identify only),
// 4 verification failure.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "klap/empirical.hpp"
#include "klap/io.hpp"
#include "klap/parallel.hpp"
#include "klap/scenario.hpp"
#include "klap/solver.hpp"
#include "klap/verify.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitNonInjective = 3;
constexpr int kExitVerifyFailed = 4;

std::string resolve(const std::string& out_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(out_dir) / p).string();
}

klap::ScenarioConfig load_config(const std::string& config_path) {
  const std::string text = klap::read_text_file(config_path);
  const std::string base_dir = fs::path(config_path).parent_path().string();
  return klap::parse_scenario(text, base_dir.empty() ? "." : base_dir);
}

ordered_json identifiability_json(const klap::IdentifiabilityReport& report) {
  ordered_json j;
  j["injective"] = report.injective;
  j["nullspace_dimension_on_zero_sum_subspace"] =
      report.nullspace_dimension_on_zero_sum_subspace;
  j["smallest_restricted_singular_value"] =
      report.smallest_restricted_singular_value;
  j["tolerance_used"] = report.tolerance_used;
  return j;
}

// Builds the prior distribution for solve runs: explicit vector, clean
// sample histogram, or absent.
std::optional<klap::FiniteDistribution> build_prior(
    const klap::ScenarioConfig& config) {
  if (config.prior_vector) return config.prior_vector;
  if (config.prior_sample_count) {
    if (!config.p_data) {
      throw klap::ConfigError("prior.sample_count requires p_data");
    }
    const klap::SampleBatch batch = klap::sample_clean(
        *config.p_data, *config.prior_sample_count, config.solver.seed);
    return klap::empirical_distribution(batch, config.kernel.input_size(),
                                        config.prior_smoothing);
  }
  return std::nullopt;
}

// q for solve runs: empirical histogram when noisy_samples is configured,
// otherwise the exact image of p_data under the solver kernel.
klap::FiniteDistribution build_q(const klap::ScenarioConfig& config,
                                 const klap::CorruptionKernel& solver_kernel) {
  if (!config.p_data) throw klap::ConfigError("p_data: required for solve");
  if (config.noisy_count) {
    const klap::SampleBatch batch = klap::sample_corrupted(
        config.kernel, *config.p_data, *config.noisy_count,
        config.solver.seed);
    return klap::empirical_distribution(batch, config.kernel.output_size(),
                                        config.noisy_smoothing);
  }
  return klap::apply(solver_kernel, *config.p_data);
}

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
  const klap::ScenarioConfig config = load_config(config_path);
  const klap::CorruptionKernel kernel = config.solver_kernel();
  const klap::FiniteDistribution q = build_q(config, kernel);
  const std::optional<klap::FiniteDistribution> prior = build_prior(config);
  if (config.solver.lambda > 0.0 && !prior) {
    throw klap::ConfigError("solver.lambda > 0 requires a prior");
  }

  klap::SolveProbes probes;
  if (config.p_data) probes.reference = &*config.p_data;
  const klap::FiniteDistribution* h = prior ? &*prior : nullptr;
  const klap::FiniteDistribution p0 =
      prior ? *prior : klap::FiniteDistribution::uniform(kernel.input_size());
  const klap::Trajectory trajectory =
      klap::solve(kernel, q, h, config.solver, p0, probes);

  klap::write_text_file_atomic(resolve(out_dir, config.trajectory_path),
                               klap::trajectory_to_csv(trajectory));

  ordered_json summary;
  summary["converged"] = trajectory.converged;
  summary["iterations"] = trajectory.iterations_run;
  summary["final_residual"] = trajectory.records.back().residual;
  summary["final_objective"] = trajectory.records.back().objective;
  summary["final_kl_q_corrupted"] = trajectory.records.back().kl_q_corrupted;
  if (config.p_data) {
    summary["final_tv_to_pdata"] =
        klap::total_variation(*config.p_data, trajectory.final_p);
    summary["final_kl_pdata_to_p"] =
        klap::kl_divergence(*config.p_data, trajectory.final_p).value;
  }
  summary["p0_floored"] = trajectory.p0_floored;
  summary["identifiability"] =
      identifiability_json(klap::is_identifiable(kernel));
  summary["final_p"] = trajectory.final_p.weights();
  klap::write_text_file_atomic(resolve(out_dir, config.summary_path),
                               summary.dump(2) + "\n");

  std::cout << (trajectory.converged ? "converged" : "max-iterations")
            << " after " << trajectory.iterations_run << " iterations"
            << std::endl;
  return trajectory.converged ? kExitOk : kExitNoConvergence;
}

int cmd_identify(const std::string& config_path) {
  const klap::ScenarioConfig config = load_config(config_path);
  const klap::IdentifiabilityReport report =
      klap::is_identifiable(config.solver_kernel());
  std::cout << identifiability_json(report).dump() << std::endl;
  return report.injective ? kExitOk : kExitNonInjective;
}

int cmd_verify(const std::string& scale, const std::string& out_dir) {
  const klap::VerifyScale verify_scale =
      scale == "full" ? klap::VerifyScale::full : klap::VerifyScale::quick;
  const std::vector<klap::PropertyResult> results =
      klap::run_verify_suite(verify_scale);
  for (const klap::PropertyResult& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " " << r.detail
              << "\n";
  }
  klap::write_text_file_atomic(resolve(out_dir, "verify_report.csv"),
                               klap::verify_report_to_csv(results));
  const bool ok = klap::all_passed(results);
  std::cout << (ok ? "all properties passed" : "some properties FAILED")
            << std::endl;
  return ok ? kExitOk : kExitVerifyFailed;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  const klap::ScenarioConfig config = load_config(config_path);
  if (!config.p_data) throw klap::ConfigError("p_data: required for sweep");
  if (!config.noisy_count) {
    throw klap::ConfigError("noisy_samples: required for sweep");
  }
  std::vector<double> weights = config.sweep_weights;
  if (weights.empty()) {
    weights.push_back(config.solver.clean_sample_weight());
  }
  std::vector<int> clean_counts = config.sweep_clean_counts;
  if (clean_counts.empty()) {
    clean_counts.push_back(config.prior_sample_count.value_or(0));
  }
  std::vector<double> gammas = config.sweep_gammas;
  if (gammas.empty()) gammas.push_back(config.solver.gamma);

  klap::RecoveryOptions options;
  options.kernel_floor =
      config.support_floor_eps > 0.0 ? config.support_floor_eps : 1e-6;
  options.prior_smoothing = config.prior_smoothing;
  options.noisy_smoothing = config.noisy_smoothing;

  klap::RecoveryReport merged;
  std::vector<klap::RecoveryReport> per_gamma(gammas.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(gammas.size()); ++i) {
    per_gamma[i] = klap::recoverability_experiment(
        config.kernel, *config.p_data, clean_counts, *config.noisy_count,
        weights, gammas[i], config.solver.seed, config.solver, options);
  }
  for (const klap::RecoveryReport& part : per_gamma) {
    merged.kernel_floor = part.kernel_floor;
    merged.kernel_injective = part.kernel_injective;
    merged.rows.insert(merged.rows.end(), part.rows.begin(), part.rows.end());
  }
  std::stable_sort(merged.rows.begin(), merged.rows.end(),
                   [](const klap::RecoveryRow& a, const klap::RecoveryRow& b) {
                     if (a.clean_count != b.clean_count) {
                       return a.clean_count < b.clean_count;
                     }
                     if (a.lambda_weight != b.lambda_weight) {
                       return a.lambda_weight < b.lambda_weight;
                     }
                     return a.gamma < b.gamma;
                   });
  klap::write_text_file_atomic(resolve(out_dir, config.report_path),
                               klap::recovery_report_to_csv(merged));
  std::cout << "sweep wrote " << merged.rows.size() << " rows" << std::endl;
  return kExitOk;
}

int cmd_sample(const std::string& config_path, const std::string& out_dir) {
  const klap::ScenarioConfig config = load_config(config_path);
  if (!config.p_data) throw klap::ConfigError("p_data: required for sample");
  if (!config.sample_count) {
    throw klap::ConfigError("sample: required for the sample subcommand");
  }
  const klap::SampleBatch batch = klap::sample_corrupted(
      config.kernel, *config.p_data, *config.sample_count,
      config.solver.seed);
  std::string outcomes = "outcome\n";
  for (int o : batch.outcomes) {
    outcomes += std::to_string(o);
    outcomes += '\n';
  }
  klap::write_text_file_atomic(resolve(out_dir, config.samples_path),
                               outcomes);
  const klap::FiniteDistribution empirical = klap::empirical_distribution(
      batch, config.kernel.output_size(), config.sample_smoothing);
  std::string histogram = "symbol,weight\n";
  for (int i = 0; i < empirical.size(); ++i) {
    histogram += std::to_string(i);
    histogram += ',';
    histogram += klap::format_g17(empirical[i]);
    histogram += '\n';
  }
  klap::write_text_file_atomic(resolve(out_dir, config.empirical_path),
                               histogram);
  std::cout << "wrote " << batch.count << " samples" << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL ambient-projection solver"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --jobs appear after the subcommand too

  std::string config_path;
  std::string out_dir = ".";
  std::string scale = "quick";
  int jobs = 0;
  app.add_option("--jobs", jobs, "thread cap for parallel sections");

  CLI::App* solve = app.add_subcommand("solve", "run the solver on a scenario");
  solve->add_option("--config", config_path, "scenario JSON")->required();
  solve->add_option("--out", out_dir, "output directory");

  CLI::App* identify =
      app.add_subcommand("identify", "injectivity report for a kernel");
  identify->add_option("--config", config_path, "scenario JSON")->required();

  CLI::App* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--scale", scale, "quick or full")
      ->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--out", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "finite-sample sweep");
  sweep->add_option("--config", config_path, "scenario JSON")->required();
  sweep->add_option("--out", out_dir, "output directory");

  CLI::App* sample = app.add_subcommand("sample", "draw corrupted samples");
  sample->add_option("--config", config_path, "scenario JSON")->required();
  sample->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;  // --help exits cleanly
  }
  if (jobs > 0) klap::set_thread_count(jobs);

  try {
    if (solve->parsed()) return cmd_solve(config_path, out_dir);
    if (identify->parsed()) return cmd_identify(config_path);
    if (verify->parsed()) return cmd_verify(scale, out_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir);
    if (sample->parsed()) return cmd_sample(config_path, out_dir);
  } catch (const klap::ConfigError& err) {
    std::cerr << "config error: " << err.what() << std::endl;
    return kExitConfig;
  } catch (const klap::Error& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kExitConfig;
  }
  return kExitConfig;
}
