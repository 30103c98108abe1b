// Test-side oracles, deliberately independent of the library's
// implementation choices: a row-reduction rank computation, a direct DFT,
// and the regularized incomplete gamma for chi-square p-values.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace testsupport {

// Rank by Gaussian elimination with partial pivoting; tolerance relative
// to the largest absolute entry.
inline int matrix_rank(std::vector<std::vector<double>> m, double rel_tol) {
  if (m.empty()) return 0;
  const int rows = static_cast<int>(m.size());
  const int cols = static_cast<int>(m[0].size());
  double max_abs = 0.0;
  for (const auto& row : m) {
    for (double v : row) max_abs = std::max(max_abs, std::abs(v));
  }
  const double tol = rel_tol * std::max(max_abs, 1.0);
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int pivot = -1;
    double best = tol;
    for (int r = rank; r < rows; ++r) {
      if (std::abs(m[r][col]) > best) {
        best = std::abs(m[r][col]);
        pivot = r;
      }
    }
    if (pivot < 0) continue;
    std::swap(m[rank], m[pivot]);
    for (int r = 0; r < rows; ++r) {
      if (r == rank || m[r][col] == 0.0) continue;
      const double f = m[r][col] / m[rank][col];
      for (int c = col; c < cols; ++c) m[r][c] -= f * m[rank][c];
    }
    ++rank;
  }
  return rank;
}

// Injectivity of a column-stochastic matrix on the zero-sum subspace,
// decided by the rank of the matrix with an appended all-ones row.
inline int restricted_nullspace_dim(
    const std::vector<std::vector<double>>& kernel_rows, int input_size) {
  std::vector<std::vector<double>> stacked = kernel_rows;
  stacked.emplace_back(input_size, 1.0);
  return input_size - matrix_rank(stacked, 1e-9);
}

// Direct DFT magnitudes of a real sequence.
inline std::vector<double> dft_magnitudes(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> mags(n);
  for (int k = 0; k < n; ++k) {
    std::complex<double> sum(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      const double angle = -2.0 * M_PI * k * j / n;
      sum += v[j] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    mags[k] = std::abs(sum);
  }
  return mags;
}

// Regularized upper incomplete gamma Q(a, x) via the series / continued
// fraction split; classical numerics, good to ~1e-12 here.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    // P(a, x) by series; Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(log_prefactor);
  }
  // Q(a, x) by Lentz continued fraction.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(log_prefactor);
}

// Chi-square goodness-of-fit p-value for observed counts against expected
// probabilities.
inline double chi_square_p_value(const std::vector<int>& counts,
                                 const std::vector<double>& expected_probs,
                                 int n) {
  double stat = 0.0;
  int dof = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = n * expected_probs[i];
    if (expected <= 0.0) continue;
    const double d = counts[i] - expected;
    stat += d * d / expected;
    ++dof;
  }
  return gamma_q(0.5 * dof, 0.5 * stat);
}

}  // namespace testsupport
