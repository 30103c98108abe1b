#pragma once

#include <string>
#include <vector>

#include "klap/core.hpp"
#include "klap/parallel.hpp"

namespace klap {

enum class Boundary { cyclic, clipped };

// Column-stochastic corruption kernel r(y|x): entry (y, x) is the
// probability of observing y given the clean symbol x. Each column is a
// distribution over the output alphabet. Immutable after construction.
class CorruptionKernel {
public:
  CorruptionKernel(int output_size, int input_size,
                   std::vector<double> row_major_entries, std::string label);

  int input_size() const { return input_size_; }
  int output_size() const { return output_size_; }
  const std::string& label() const { return label_; }

  double operator()(int y, int x) const {
    return entries_[static_cast<std::size_t>(y) * input_size_ + x];
  }
  const std::vector<double>& entries() const { return entries_; }

  // True when every entry is exactly 0 or 1, i.e. the kernel encodes a
  // deterministic map X -> Y.
  bool deterministic() const;

  // For a deterministic kernel, the image of x. Throws otherwise.
  int map_of(int x) const;

private:
  int output_size_;
  int input_size_;
  std::vector<double> entries_;  // row-major, output_size x input_size
  std::string label_;
};

// Conditional table u_y(x): row y is the posterior over clean symbols
// given observation y. Rows sum to one.
struct Posterior {
  int output_size = 0;
  int input_size = 0;
  std::vector<double> table;  // row-major, output_size x input_size

  double operator()(int y, int x) const {
    return table[static_cast<std::size_t>(y) * input_size + x];
  }
};

// Injectivity diagnostics for the corruption operator restricted to the
// zero-sum subspace {v : sum v_i = 0} (differences of distributions).
struct IdentifiabilityReport {
  bool injective = false;
  int nullspace_dimension_on_zero_sum_subspace = 0;
  double smallest_restricted_singular_value = 0.0;
  double tolerance_used = 0.0;  // absolute singular-value cut applied
};

// Negative log-likelihood costs c(x, y) = -log r(y|x); |X| x |Y|,
// finite everywhere (requires a strictly positive kernel).
struct CostMatrix {
  int input_size = 0;   // |X|
  int output_size = 0;  // |Y|
  std::vector<double> entries;  // row-major, input_size x output_size

  double operator()(int x, int y) const {
    return entries[static_cast<std::size_t>(x) * output_size + y];
  }
};

// ---- constructors ---------------------------------------------------------

CorruptionKernel identity_kernel(int alphabet_size);

// Additive noise y = x + e with e ~ noise_pmf over offsets. Cyclic mode
// wraps (offset j = pmf index j, so r(y|x) = pmf((y - x) mod n) and the
// pmf must cover the whole alphabet); clipped mode uses centered offsets
// j - floor((m-1)/2) and accumulates overflow mass at the boundary bins.
CorruptionKernel additive_noise_kernel(int alphabet_size,
                                       const FiniteDistribution& noise_pmf,
                                       Boundary boundary);

// Discrete convolution with a stencil of width <= alphabet_size; same
// offset conventions as additive_noise_kernel. Provided as a named
// constructor because blur stencils are wide and low-pass.
CorruptionKernel blur_kernel(int alphabet_size,
                             const FiniteDistribution& stencil,
                             Boundary boundary);

// Coordinate-wise masking. X enumerates num_coordinates coordinates with
// `levels` values each (row-major, coordinate 0 most significant); Y adds
// one MASK symbol per coordinate (value = levels). Each coordinate is
// masked independently with probability alpha and copied otherwise.
CorruptionKernel dropout_kernel(int num_coordinates, int levels,
                                double mask_prob);

// Deterministic map: r(y|x) = 1 iff y == map[x].
CorruptionKernel deterministic_map_kernel(const std::vector<int>& map,
                                          int output_size);

// Photon-count model: X is the intensity lattice {0, 1/(L-1), ..., 1},
// Y the counts {0..truncation}, r(y|x) = Poisson(alpha * x) pmf with the
// tail mass folded into the last bin.
CorruptionKernel poisson_kernel(int intensity_levels, double photon_budget,
                                int truncation);

// Truncation that keeps the folded Poisson tail below ~1e-8:
// ceil(alpha + 8 sqrt(alpha)), at least 1.
int poisson_default_truncation(double photon_budget);

// Mixes every column with the uniform distribution over Y at weight eps,
// making all entries strictly positive so that log r(y|x) is finite.
CorruptionKernel support_floor(const CorruptionKernel& kernel, double eps);

// ---- operations -----------------------------------------------------------

// Corrupted image q(y) = sum_x r(y|x) p(x).
FiniteDistribution apply(const CorruptionKernel& kernel,
                         const FiniteDistribution& p,
                         Exec exec = Exec::parallel);

// Exact Bayes posterior table: row y proportional to p(x) r(y|x).
// Unreachable rows (q(y) = 0 under p) are defined as uniform over the
// support of p; they carry zero weight in every mixture against a
// realizable q, so the convention only suppresses NaN propagation.
Posterior posterior(const CorruptionKernel& kernel,
                    const FiniteDistribution& p, Exec exec = Exec::parallel);

// Injectivity on the zero-sum subspace, decided from the singular values
// of the kernel matrix composed with an orthonormal zero-sum basis.
// `tol` is relative to the largest singular value of the kernel.
IdentifiabilityReport is_identifiable(const CorruptionKernel& kernel,
                                      double tol = 1e-9);

// c(x, y) = -log r(y|x). Throws SupportError (mentioning support_floor)
// when the kernel has a zero entry.
CostMatrix cost_matrix(const CorruptionKernel& kernel);

}  // namespace klap
