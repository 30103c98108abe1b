#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "klap/core.hpp"
#include "klap/kernels.hpp"
#include "klap/solver.hpp"

namespace klap {

// One batch of i.i.d. alphabet indices. `seed` and the batch label fix
// the RNG stream, so batches are reproducible independently of the order
// in which they are drawn.
struct SampleBatch {
  std::vector<int> outcomes;
  enum class Source { clean, corrupted } source = Source::corrupted;
  std::uint64_t seed = 0;
  int count = 0;
};

// n draws of y: x ~ p_data, then y ~ r(.|x). Stream label "corrupted".
SampleBatch sample_corrupted(const CorruptionKernel& kernel,
                             const FiniteDistribution& p_data, int n,
                             std::uint64_t seed);

// n draws of x ~ p_data. Stream label "clean".
SampleBatch sample_clean(const FiniteDistribution& p_data, int n,
                         std::uint64_t seed);

// Additive-smoothed histogram: (count(i) + smoothing) /
// (n + smoothing * alphabet_size). smoothing = 0 is the raw histogram.
FiniteDistribution empirical_distribution(const SampleBatch& batch,
                                          int alphabet_size,
                                          double smoothing);

// One configuration of the finite-sample study.
struct RecoveryRow {
  int clean_count = 0;
  int noisy_count = 0;
  double lambda_weight = 0.0;  // w = lambda / (1 + lambda)
  double gamma = 1.0;
  double kl_to_pdata = 0.0;    // D_KL(p_data || final_p)
  double tv_to_pdata = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  double kernel_floor = 0.0;  // support floor applied before solving
  bool kernel_injective = false;
};

struct RecoveryOptions {
  double kernel_floor = 1e-6;    // applied so empirical q stays feasible
  double prior_smoothing = 0.0;  // additive smoothing for the clean prior
  double noisy_smoothing = 0.0;  // additive smoothing for q-hat
};

// Finite-sample recovery study. One corrupted batch of noisy_count draws
// yields q-hat; one clean pool of max(clean_counts) draws is drawn once
// and each clean count M uses its first M outcomes, so growing M refines
// the same prior rather than resampling it. For every valid pair
// (M, w) the solver runs with h = smoothed histogram of the M clean draws
// (absent at M = 0), lambda = w/(1-w), p0 = h when present else uniform.
// Pairs with M = 0 and w > 0 are skipped (no prior to weigh). Rows are
// sorted by (clean_count, lambda_weight).
RecoveryReport recoverability_experiment(
    const CorruptionKernel& kernel, const FiniteDistribution& p_data,
    const std::vector<int>& clean_counts, int noisy_count,
    const std::vector<double>& lambda_weights, double gamma,
    std::uint64_t seed, const SolverConfig& base_config,
    const RecoveryOptions& options = {});

}  // namespace klap
