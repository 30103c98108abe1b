#pragma once

#include <vector>

#include "klap/common.hpp"

namespace klap {

// A point on the probability simplex over a finite alphabet {0..n-1}.
// Weights are nonnegative and sum to one within kSimplexSumTol; instances
// are immutable after construction and safe to share across threads.
class FiniteDistribution {
public:
  // Validating constructor: weights must already satisfy the invariants.
  static FiniteDistribution from_weights(std::vector<double> weights);

  // Same, but silently renormalizes when the sum has drifted from 1 by
  // more than kSimplexSumTol. Used after arithmetic combinations so that
  // floating drift cannot accumulate over long solver runs.
  static FiniteDistribution from_weights_repaired(std::vector<double> weights);

  static FiniteDistribution uniform(int alphabet_size);
  static FiniteDistribution point_mass(int alphabet_size, int index);

  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  bool full_support() const;
  double min_weight() const;

private:
  explicit FiniteDistribution(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

// Extended-real divergence value. `finite` is false exactly when the
// first argument's support is not contained in the second's; `value` is
// then +infinity. Support violations are reported, not thrown: the solver
// consumes them as a diagnostic signal.
struct DivergenceValue {
  double value = 0.0;
  bool finite = true;
};

// normalize: scales a nonnegative vector onto the simplex.
// Throws DegenerateInputError on an all-zero input and DomainError on any
// negative entry. Idempotent: re-normalizing a result returns it bitwise
// unchanged (the scale pass is skipped when the sum is already within
// tolerance of 1).
FiniteDistribution normalize(const std::vector<double>& raw);

// D_KL(a || b) in nats, accumulated in the log domain with the
// 0 log 0 = 0 convention. Result clamped at 0 (Gibbs inequality).
DivergenceValue kl_divergence(const FiniteDistribution& a,
                              const FiniteDistribution& b);

// Total variation distance, 0.5 * sum |a_i - b_i|, in [0, 1].
double total_variation(const FiniteDistribution& a,
                       const FiniteDistribution& b);

// Convex combination (1 - weight_on_b) * a + weight_on_b * b.
FiniteDistribution mix(const FiniteDistribution& a,
                       const FiniteDistribution& b, double weight_on_b);

// L1 distance between weight vectors (= 2 * total_variation).
double l1_distance(const FiniteDistribution& a, const FiniteDistribution& b);

}  // namespace klap
