#include "klap/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace klap {

namespace {

double weight_sum(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

void check_nonnegative(const std::vector<double>& w) {
  for (double v : w) {
    if (v < 0.0 || std::isnan(v)) throw DomainError("negative weight");
  }
}

void check_same_size(const FiniteDistribution& a,
                     const FiniteDistribution& b) {
  if (a.size() != b.size()) throw ShapeError("alphabet sizes differ");
}

}  // namespace

FiniteDistribution FiniteDistribution::from_weights(
    std::vector<double> weights) {
  if (weights.empty()) throw DegenerateInputError("empty weight vector");
  check_nonnegative(weights);
  const double s = weight_sum(weights);
  if (std::abs(s - 1.0) > kSimplexSumTol) {
    throw DomainError("weights sum to " + std::to_string(s) + ", expected 1");
  }
  return FiniteDistribution(std::move(weights));
}

FiniteDistribution FiniteDistribution::from_weights_repaired(
    std::vector<double> weights) {
  if (weights.empty()) throw DegenerateInputError("empty weight vector");
  check_nonnegative(weights);
  double s = weight_sum(weights);
  if (s <= 0.0) throw DegenerateInputError("all-zero weight vector");
  if (std::abs(s - 1.0) > kSimplexSumTol) {
    for (double& v : weights) v /= s;
  }
  return FiniteDistribution(std::move(weights));
}

FiniteDistribution FiniteDistribution::uniform(int alphabet_size) {
  if (alphabet_size < 1) throw DomainError("alphabet_size must be >= 1");
  return FiniteDistribution(
      std::vector<double>(alphabet_size, 1.0 / alphabet_size));
}

FiniteDistribution FiniteDistribution::point_mass(int alphabet_size,
                                                  int index) {
  if (alphabet_size < 1) throw DomainError("alphabet_size must be >= 1");
  if (index < 0 || index >= alphabet_size) throw DomainError("index range");
  std::vector<double> w(alphabet_size, 0.0);
  w[index] = 1.0;
  return FiniteDistribution(std::move(w));
}

bool FiniteDistribution::full_support() const {
  return std::all_of(weights_.begin(), weights_.end(),
                     [](double v) { return v > 0.0; });
}

double FiniteDistribution::min_weight() const {
  return *std::min_element(weights_.begin(), weights_.end());
}

FiniteDistribution normalize(const std::vector<double>& raw) {
  if (raw.empty()) throw DegenerateInputError("empty weight vector");
  check_nonnegative(raw);
  double s = weight_sum(raw);
  if (s <= 0.0) throw DegenerateInputError("all-zero weight vector");
  std::vector<double> w = raw;
  // Skip the scale pass when already on the simplex; this makes
  // normalize(normalize(v)) bitwise equal to normalize(v).
  if (std::abs(s - 1.0) > kSimplexSumTol) {
    for (double& v : w) v /= s;
    s = weight_sum(w);
    if (std::abs(s - 1.0) > kSimplexSumTol) {
      for (double& v : w) v /= s;  // second pass for extreme dynamic range
    }
  }
  return FiniteDistribution::from_weights_repaired(std::move(w));
}

DivergenceValue kl_divergence(const FiniteDistribution& a,
                              const FiniteDistribution& b) {
  check_same_size(a, b);
  double sum = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;  // 0 log 0 = 0
    if (b[i] == 0.0) {
      return {std::numeric_limits<double>::infinity(), false};
    }
    sum += ai * (std::log(ai) - std::log(b[i]));
  }
  // Gibbs: the exact value is nonnegative; rounding can leave a tiny
  // negative residue when a ~ b.
  return {std::max(sum, 0.0), true};
}

double total_variation(const FiniteDistribution& a,
                       const FiniteDistribution& b) {
  check_same_size(a, b);
  double sum = 0.0;
  for (int i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

double l1_distance(const FiniteDistribution& a, const FiniteDistribution& b) {
  check_same_size(a, b);
  double sum = 0.0;
  for (int i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

FiniteDistribution mix(const FiniteDistribution& a,
                       const FiniteDistribution& b, double weight_on_b) {
  check_same_size(a, b);
  if (!(weight_on_b >= 0.0 && weight_on_b <= 1.0)) {
    throw DomainError("mix weight outside [0, 1]");
  }
  std::vector<double> w(a.size());
  for (int i = 0; i < a.size(); ++i) {
    w[i] = (1.0 - weight_on_b) * a[i] + weight_on_b * b[i];
  }
  return FiniteDistribution::from_weights_repaired(std::move(w));
}

}  // namespace klap
