#include "klap/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace klap {

namespace {

// Below this many element operations the parallel policy falls through to
// the serial loop; both paths compute identical sums either way.
constexpr std::int64_t kParallelGrain = 1 << 14;

void check_column_stochastic(int ny, int nx, const std::vector<double>& e) {
  for (int x = 0; x < nx; ++x) {
    double col = 0.0;
    for (int y = 0; y < ny; ++y) {
      const double v = e[static_cast<std::size_t>(y) * nx + x];
      if (v < 0.0 || std::isnan(v)) throw DomainError("negative kernel entry");
      col += v;
    }
    if (std::abs(col - 1.0) > kSimplexSumTol) {
      throw DomainError("kernel column " + std::to_string(x) + " sums to " +
                        std::to_string(col));
    }
  }
}

// Shared backbone of the additive-noise and blur constructors.
// Cyclic: offset j = pmf index j, r((x + j) mod n | x) += pmf_j.
// Clipped: centered offsets j - floor((m - 1) / 2); out-of-range targets
// are clamped, so overflow mass accumulates at the boundary bins.
CorruptionKernel convolution_kernel(int n, const FiniteDistribution& pmf,
                                    Boundary boundary, std::string label) {
  if (n < 1) throw DomainError("alphabet_size must be >= 1");
  const int m = pmf.size();
  if (m > n) throw ShapeError("offset pmf wider than the alphabet");
  std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
  const int center = boundary == Boundary::clipped ? (m - 1) / 2 : 0;
  for (int x = 0; x < n; ++x) {
    for (int j = 0; j < m; ++j) {
      int y;
      if (boundary == Boundary::cyclic) {
        y = (x + j) % n;
      } else {
        y = std::clamp(x + j - center, 0, n - 1);
      }
      e[static_cast<std::size_t>(y) * n + x] += pmf[j];
    }
  }
  return CorruptionKernel(n, n, std::move(e), std::move(label));
}

}  // namespace

CorruptionKernel::CorruptionKernel(int output_size, int input_size,
                                   std::vector<double> row_major_entries,
                                   std::string label)
    : output_size_(output_size),
      input_size_(input_size),
      entries_(std::move(row_major_entries)),
      label_(std::move(label)) {
  if (output_size_ < 1 || input_size_ < 1) {
    throw DomainError("kernel sizes must be >= 1");
  }
  if (entries_.size() !=
      static_cast<std::size_t>(output_size_) * input_size_) {
    throw ShapeError("kernel entry count does not match sizes");
  }
  check_column_stochastic(output_size_, input_size_, entries_);
}

bool CorruptionKernel::deterministic() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

int CorruptionKernel::map_of(int x) const {
  if (x < 0 || x >= input_size_) throw DomainError("symbol out of range");
  for (int y = 0; y < output_size_; ++y) {
    if ((*this)(y, x) == 1.0) return y;
  }
  throw DomainError("kernel column " + std::to_string(x) +
                    " is not deterministic");
}

CorruptionKernel identity_kernel(int alphabet_size) {
  std::vector<int> map(alphabet_size);
  for (int i = 0; i < alphabet_size; ++i) map[i] = i;
  return deterministic_map_kernel(map, alphabet_size);
}

CorruptionKernel additive_noise_kernel(int alphabet_size,
                                       const FiniteDistribution& noise_pmf,
                                       Boundary boundary) {
  if (boundary == Boundary::cyclic && noise_pmf.size() != alphabet_size) {
    throw ShapeError("cyclic noise pmf must cover the whole alphabet");
  }
  return convolution_kernel(alphabet_size, noise_pmf, boundary,
                            "additive_noise");
}

CorruptionKernel blur_kernel(int alphabet_size,
                             const FiniteDistribution& stencil,
                             Boundary boundary) {
  return convolution_kernel(alphabet_size, stencil, boundary, "blur");
}

CorruptionKernel dropout_kernel(int num_coordinates, int levels,
                                double mask_prob) {
  if (num_coordinates < 1) throw DomainError("need >= 1 coordinate");
  if (levels < 1) throw DomainError("need >= 1 level per coordinate");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) {
    throw DomainError("mask probability outside [0, 1]");
  }
  std::int64_t nx = 1, ny = 1;
  for (int i = 0; i < num_coordinates; ++i) {
    nx *= levels;
    ny *= levels + 1;  // extra MASK symbol per coordinate
    if (nx > 1 << 20 || ny > 1 << 20) {
      throw ScaleGuardError("dropout alphabet too large");
    }
  }
  std::vector<double> e(static_cast<std::size_t>(ny) * nx, 0.0);
  // Indices decode row-major: coordinate 0 is the most significant digit,
  // base `levels` for X and `levels + 1` for Y (MASK = levels).
  for (std::int64_t x = 0; x < nx; ++x) {
    for (std::int64_t y = 0; y < ny; ++y) {
      double prob = 1.0;
      std::int64_t xr = x, yr = y;
      for (int i = num_coordinates - 1; i >= 0; --i) {
        const int xd = static_cast<int>(xr % levels);
        const int yd = static_cast<int>(yr % (levels + 1));
        xr /= levels;
        yr /= levels + 1;
        if (yd == levels) {
          prob *= mask_prob;
        } else if (yd == xd) {
          prob *= 1.0 - mask_prob;
        } else {
          prob = 0.0;
          break;
        }
      }
      if (prob != 0.0) e[static_cast<std::size_t>(y) * nx + x] = prob;
    }
  }
  return CorruptionKernel(static_cast<int>(ny), static_cast<int>(nx),
                          std::move(e), "dropout");
}

CorruptionKernel deterministic_map_kernel(const std::vector<int>& map,
                                          int output_size) {
  if (map.empty()) throw DegenerateInputError("empty map table");
  if (output_size < 1) throw DomainError("output_size must be >= 1");
  const int nx = static_cast<int>(map.size());
  std::vector<double> e(static_cast<std::size_t>(output_size) * nx, 0.0);
  for (int x = 0; x < nx; ++x) {
    if (map[x] < 0 || map[x] >= output_size) {
      throw DomainError("map value out of the output range");
    }
    e[static_cast<std::size_t>(map[x]) * nx + x] = 1.0;
  }
  return CorruptionKernel(output_size, nx, std::move(e), "deterministic_map");
}

int poisson_default_truncation(double photon_budget) {
  if (photon_budget <= 0.0) throw DomainError("photon budget must be > 0");
  return std::max(
      1, static_cast<int>(
             std::ceil(photon_budget + 8.0 * std::sqrt(photon_budget))));
}

CorruptionKernel poisson_kernel(int intensity_levels, double photon_budget,
                                int truncation) {
  if (intensity_levels < 1) throw DomainError("need >= 1 intensity level");
  if (photon_budget <= 0.0) throw DomainError("photon budget must be > 0");
  if (truncation < 1) throw DomainError("truncation must be >= 1");
  const int nx = intensity_levels;
  const int ny = truncation + 1;
  std::vector<double> e(static_cast<std::size_t>(ny) * nx, 0.0);
  for (int x = 0; x < nx; ++x) {
    const double intensity =
        intensity_levels == 1
            ? 0.0
            : static_cast<double>(x) / (intensity_levels - 1);
    const double mu = photon_budget * intensity;
    double head = 0.0;
    for (int k = 0; k < truncation; ++k) {
      double pk;
      if (mu == 0.0) {
        pk = k == 0 ? 1.0 : 0.0;
      } else {
        pk = std::exp(k * std::log(mu) - mu - std::lgamma(k + 1.0));
      }
      e[static_cast<std::size_t>(k) * nx + x] = pk;
      head += pk;
    }
    // Tail mass folded into the last bin.
    e[static_cast<std::size_t>(truncation) * nx + x] =
        std::max(1.0 - head, 0.0);
  }
  return CorruptionKernel(ny, nx, std::move(e), "poisson");
}

CorruptionKernel support_floor(const CorruptionKernel& kernel, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("floor eps outside (0, 1)");
  const double uniform = eps / kernel.output_size();
  std::vector<double> e = kernel.entries();
  for (double& v : e) v = (1.0 - eps) * v + uniform;
  return CorruptionKernel(kernel.output_size(), kernel.input_size(),
                          std::move(e), kernel.label() + "+floor");
}

FiniteDistribution apply(const CorruptionKernel& kernel,
                         const FiniteDistribution& p, Exec exec) {
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  if (p.size() != nx) throw ShapeError("distribution does not fit kernel");
  std::vector<double> q(ny);
  const std::vector<double>& e = kernel.entries();
  const std::vector<double>& w = p.weights();
  auto row = [&](int y) {
    const double* r = e.data() + static_cast<std::size_t>(y) * nx;
    double s = 0.0;
    for (int x = 0; x < nx; ++x) s += r[x] * w[x];
    return s;
  };
  if (exec == Exec::parallel &&
      static_cast<std::int64_t>(nx) * ny >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ny; ++y) q[y] = row(y);
  } else {
    for (int y = 0; y < ny; ++y) q[y] = row(y);
  }
  return FiniteDistribution::from_weights_repaired(std::move(q));
}

Posterior posterior(const CorruptionKernel& kernel,
                    const FiniteDistribution& p, Exec exec) {
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  if (p.size() != nx) throw ShapeError("distribution does not fit kernel");
  Posterior post;
  post.output_size = ny;
  post.input_size = nx;
  post.table.assign(static_cast<std::size_t>(ny) * nx, 0.0);

  int support = 0;
  for (int x = 0; x < nx; ++x) {
    if (p[x] > 0.0) ++support;
  }
  const double unreachable_row_value = 1.0 / support;

  const std::vector<double>& e = kernel.entries();
  auto fill_row = [&](int y) {
    const double* r = e.data() + static_cast<std::size_t>(y) * nx;
    double* out = post.table.data() + static_cast<std::size_t>(y) * nx;
    double z = 0.0;
    for (int x = 0; x < nx; ++x) z += p[x] * r[x];
    if (z == 0.0) {
      // Unreachable observation: uniform over supp(p) by convention.
      for (int x = 0; x < nx; ++x) {
        out[x] = p[x] > 0.0 ? unreachable_row_value : 0.0;
      }
      return;
    }
    for (int x = 0; x < nx; ++x) out[x] = p[x] * r[x] / z;
  };
  if (exec == Exec::parallel &&
      static_cast<std::int64_t>(nx) * ny >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ny; ++y) fill_row(y);
  } else {
    for (int y = 0; y < ny; ++y) fill_row(y);
  }
  return post;
}

IdentifiabilityReport is_identifiable(const CorruptionKernel& kernel,
                                      double tol) {
  if (tol <= 0.0) throw DomainError("tolerance must be > 0");
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  IdentifiabilityReport report;

  Eigen::MatrixXd r(ny, nx);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) r(y, x) = kernel(y, x);
  }
  const double sigma_max = r.jacobiSvd().singularValues()(0);
  report.tolerance_used = tol * sigma_max;

  if (nx == 1) {
    // A single clean symbol: the operator is injective on a one-point
    // simplex and the zero-sum subspace is trivial.
    report.injective = true;
    report.nullspace_dimension_on_zero_sum_subspace = 0;
    report.smallest_restricted_singular_value =
        std::numeric_limits<double>::infinity();
    return report;
  }

  // Orthonormal (Helmert) basis of {v : sum v_i = 0}; the singular values
  // of r * basis are the restricted singular values.
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(nx, nx - 1);
  for (int k = 1; k < nx; ++k) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) basis(i, k - 1) = scale;
    basis(k, k - 1) = -static_cast<double>(k) * scale;
  }
  // A ny x (nx-1) matrix yields min(ny, nx-1) singular values; directions
  // beyond the row space are implicit zeros, so the nullity is the basis
  // dimension minus the numerical rank.
  Eigen::VectorXd sv = (r * basis).jacobiSvd().singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > report.tolerance_used) ++rank;
  }
  report.nullspace_dimension_on_zero_sum_subspace = (nx - 1) - rank;
  report.injective = report.nullspace_dimension_on_zero_sum_subspace == 0;
  report.smallest_restricted_singular_value =
      sv.size() < nx - 1 ? 0.0 : sv(sv.size() - 1);
  return report;
}

CostMatrix cost_matrix(const CorruptionKernel& kernel) {
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  CostMatrix cost;
  cost.input_size = nx;
  cost.output_size = ny;
  cost.entries.resize(static_cast<std::size_t>(nx) * ny);
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      const double v = kernel(y, x);
      if (v <= 0.0) {
        throw SupportError(
            "kernel has a zero entry; apply support_floor before building "
            "costs");
      }
      cost.entries[static_cast<std::size_t>(x) * ny + y] = -std::log(v);
    }
  }
  return cost;
}

}  // namespace klap
