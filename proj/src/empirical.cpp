#include "klap/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "klap/rng.hpp"

namespace klap {

namespace {

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s += w[i];
    c[i] = s;
  }
  return c;
}

}  // namespace

SampleBatch sample_clean(const FiniteDistribution& p_data, int n,
                         std::uint64_t seed) {
  if (n < 1) throw DomainError("sample count must be >= 1");
  RngStream rng(seed, "clean");
  const std::vector<double> cdf = cumulative(p_data.weights());
  SampleBatch batch;
  batch.source = SampleBatch::Source::clean;
  batch.seed = seed;
  batch.count = n;
  batch.outcomes.resize(n);
  for (int i = 0; i < n; ++i) batch.outcomes[i] = rng.next_index(cdf);
  return batch;
}

SampleBatch sample_corrupted(const CorruptionKernel& kernel,
                             const FiniteDistribution& p_data, int n,
                             std::uint64_t seed) {
  if (n < 1) throw DomainError("sample count must be >= 1");
  if (p_data.size() != kernel.input_size()) {
    throw ShapeError("p_data does not match the kernel input alphabet");
  }
  RngStream rng(seed, "corrupted");
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  const std::vector<double> clean_cdf = cumulative(p_data.weights());
  // Per-column observation CDFs, built once up front.
  std::vector<std::vector<double>> column_cdf(nx, std::vector<double>(ny));
  for (int x = 0; x < nx; ++x) {
    double s = 0.0;
    for (int y = 0; y < ny; ++y) {
      s += kernel(y, x);
      column_cdf[x][y] = s;
    }
  }
  SampleBatch batch;
  batch.source = SampleBatch::Source::corrupted;
  batch.seed = seed;
  batch.count = n;
  batch.outcomes.resize(n);
  for (int i = 0; i < n; ++i) {
    const int x = rng.next_index(clean_cdf);
    batch.outcomes[i] = rng.next_index(column_cdf[x]);
  }
  return batch;
}

FiniteDistribution empirical_distribution(const SampleBatch& batch,
                                          int alphabet_size,
                                          double smoothing) {
  if (alphabet_size < 1) throw DomainError("alphabet_size must be >= 1");
  if (smoothing < 0.0) throw DomainError("smoothing must be >= 0");
  std::vector<double> counts(alphabet_size, smoothing);
  for (int outcome : batch.outcomes) {
    if (outcome < 0 || outcome >= alphabet_size) {
      throw DomainError("outcome " + std::to_string(outcome) +
                        " outside the alphabet");
    }
    counts[outcome] += 1.0;
  }
  return normalize(counts);
}

RecoveryReport recoverability_experiment(
    const CorruptionKernel& kernel, const FiniteDistribution& p_data,
    const std::vector<int>& clean_counts, int noisy_count,
    const std::vector<double>& lambda_weights, double gamma,
    std::uint64_t seed, const SolverConfig& base_config,
    const RecoveryOptions& options) {
  if (noisy_count < 1) throw ConfigError("noisy_count must be >= 1");
  if (clean_counts.empty() || lambda_weights.empty()) {
    throw ConfigError("sweep axes must be non-empty");
  }
  for (int m : clean_counts) {
    if (m < 0) throw ConfigError("clean counts must be >= 0");
  }
  for (double w : lambda_weights) {
    if (!(w >= 0.0 && w < 1.0)) {
      throw ConfigError("clean-sample weights must lie in [0, 1)");
    }
  }

  RecoveryReport report;
  report.kernel_floor = options.kernel_floor;
  report.kernel_injective = is_identifiable(kernel).injective;

  // Empirical q-hat, built from one corrupted batch shared by all rows;
  // the floored kernel keeps the objective finite even when q-hat charges
  // observations outside the exact image.
  const CorruptionKernel solver_kernel =
      options.kernel_floor > 0.0 ? support_floor(kernel, options.kernel_floor)
                                 : kernel;
  const SampleBatch noisy =
      sample_corrupted(kernel, p_data, noisy_count, seed);
  const FiniteDistribution q_hat = empirical_distribution(
      noisy, kernel.output_size(), options.noisy_smoothing);

  // One clean pool, drawn once; clean count M uses its first M outcomes so
  // larger M refines the same prior instead of resampling it.
  const int max_clean = *std::max_element(clean_counts.begin(),
                                          clean_counts.end());
  SampleBatch clean_pool;
  if (max_clean > 0) clean_pool = sample_clean(p_data, max_clean, seed);

  std::vector<int> counts_sorted = clean_counts;
  std::sort(counts_sorted.begin(), counts_sorted.end());
  counts_sorted.erase(
      std::unique(counts_sorted.begin(), counts_sorted.end()),
      counts_sorted.end());
  std::vector<double> weights_sorted = lambda_weights;
  std::sort(weights_sorted.begin(), weights_sorted.end());
  weights_sorted.erase(
      std::unique(weights_sorted.begin(), weights_sorted.end()),
      weights_sorted.end());

  for (int m : counts_sorted) {
    std::optional<FiniteDistribution> prior;
    if (m > 0) {
      SampleBatch head = clean_pool;
      head.outcomes.resize(m);
      head.count = m;
      prior = empirical_distribution(head, kernel.input_size(),
                                     options.prior_smoothing);
    }
    for (double w : weights_sorted) {
      if (m == 0 && w > 0.0) continue;  // no prior available to weigh
      SolverConfig config = base_config;
      config.lambda = lambda_from_clean_weight(w);
      config.gamma = gamma;
      config.seed = seed;
      const FiniteDistribution p0 =
          prior ? *prior : FiniteDistribution::uniform(kernel.input_size());
      const FiniteDistribution* h = prior ? &*prior : nullptr;
      const Trajectory run =
          solve(solver_kernel, q_hat, w > 0.0 ? h : nullptr, config, p0);
      RecoveryRow row;
      row.clean_count = m;
      row.noisy_count = noisy_count;
      row.lambda_weight = w;
      row.gamma = gamma;
      row.kl_to_pdata = kl_divergence(p_data, run.final_p).value;
      row.tv_to_pdata = total_variation(p_data, run.final_p);
      row.iterations = run.iterations_run;
      row.converged = run.converged;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace klap
