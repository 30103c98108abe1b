#include "klap/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "klap/solver.hpp"

namespace klap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double binomial(std::int64_t n, std::int64_t k) {
  double v = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    v *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return v;
}

// Objective evaluation on a lattice point given by integer counts; the
// corrupted image is accumulated in count space and divided by the
// lattice size once, so objectives that are flat in exact arithmetic stay
// exactly flat and the documented tie-break decides.
double objective_at_counts(const CorruptionKernel& kernel,
                           const std::vector<double>& q, const double* h,
                           double lambda, const int* counts, int lattice_n,
                           std::vector<double>& corrupted_buf) {
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  const std::vector<double>& e = kernel.entries();
  corrupted_buf.resize(ny);
  for (int y = 0; y < ny; ++y) {
    const double* row = e.data() + static_cast<std::size_t>(y) * nx;
    double s = 0.0;
    for (int x = 0; x < nx; ++x) s += row[x] * counts[x];
    corrupted_buf[y] = s / lattice_n;
  }
  double value = 0.0;
  for (int y = 0; y < ny; ++y) {
    if (q[y] == 0.0) continue;
    if (corrupted_buf[y] <= 0.0) return kInf;
    value += q[y] * (std::log(q[y]) - std::log(corrupted_buf[y]));
  }
  if (lambda > 0.0) {
    for (int x = 0; x < nx; ++x) {
      if (h[x] == 0.0) continue;
      if (counts[x] <= 0) return kInf;
      const double w = static_cast<double>(counts[x]) / lattice_n;
      value += lambda * h[x] * (std::log(h[x]) - std::log(w));
    }
  }
  return value;
}

struct LatticeBest {
  double value = kInf;
  std::uint64_t ordinal = std::numeric_limits<std::uint64_t>::max();
  std::array<int, 4> counts{};
};

void consider(LatticeBest& best, double value, std::uint64_t ordinal,
              const std::array<int, 4>& counts) {
  if (value < best.value ||
      (value == best.value && ordinal < best.ordinal)) {
    best.value = value;
    best.ordinal = ordinal;
    best.counts = counts;
  }
}

// Enumerates compositions of `remaining` over dims [dim, d) with the
// prefix already fixed, in lexicographic order (each coordinate ascending,
// last coordinate taking the remainder). `ordinal` tracks the global
// enumeration position so ties resolve to the first point scanned.
void scan_block(const CorruptionKernel& kernel, const std::vector<double>& q,
                const double* h, double lambda, int d, int lattice_n,
                int dim, int remaining, std::array<int, 4>& counts,
                std::uint64_t& ordinal, std::vector<double>& corrupted_buf,
                LatticeBest& best) {
  if (dim == d - 1) {
    counts[dim] = remaining;
    const double value = objective_at_counts(kernel, q, h, lambda,
                                             counts.data(), lattice_n,
                                             corrupted_buf);
    consider(best, value, ordinal, counts);
    ++ordinal;
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    counts[dim] = c;
    scan_block(kernel, q, h, lambda, d, lattice_n, dim + 1, remaining - c,
               counts, ordinal, corrupted_buf, best);
  }
}

}  // namespace

const char* to_string(ProjectionMethod method) {
  switch (method) {
    case ProjectionMethod::closed_form: return "closed_form";
    case ProjectionMethod::small_lambda_limit: return "small_lambda_limit";
    case ProjectionMethod::grid: return "grid";
  }
  return "unknown";
}

FiniteDistribution brute_force_minimizer(const CorruptionKernel& kernel,
                                         const FiniteDistribution& q,
                                         const FiniteDistribution* h,
                                         double lambda, double grid_resolution,
                                         Exec exec) {
  const int d = kernel.input_size();
  if (d > 4) throw ScaleGuardError("brute force limited to |X| <= 4");
  if (!(grid_resolution > 0.0 && grid_resolution <= 0.1)) {
    throw DomainError("grid resolution outside (0, 0.1]");
  }
  if (q.size() != kernel.output_size()) throw ShapeError("q size mismatch");
  if (lambda > 0.0 && h == nullptr) {
    throw ConfigError("lambda > 0 requires a prior distribution");
  }
  if (h != nullptr && h->size() != d) throw ShapeError("prior size mismatch");

  if (d == 1) return FiniteDistribution::point_mass(1, 0);

  const int lattice_n = static_cast<int>(std::lround(1.0 / grid_resolution));
  const double total_points = binomial(lattice_n + d - 1, d - 1);
  if (total_points > 2e8) {
    throw ScaleGuardError("lattice would exceed 2e8 points");
  }
  const double* hw = h != nullptr ? h->weights().data() : nullptr;

  // Parallel split over the first coordinate; every block knows its global
  // starting ordinal, so the merged tie-break equals the serial scan.
  std::vector<std::uint64_t> block_start(lattice_n + 2, 0);
  for (int c0 = 0; c0 <= lattice_n; ++c0) {
    const double block =
        d == 1 ? 1.0 : binomial(lattice_n - c0 + d - 2, d - 2);
    block_start[c0 + 1] =
        block_start[c0] + static_cast<std::uint64_t>(std::llround(block));
  }

  const bool parallel = exec == Exec::parallel && total_points > 4096.0;
  std::vector<LatticeBest> partial(lattice_n + 1);
  auto run_block = [&](int c0) {
    std::array<int, 4> counts{};
    counts[0] = c0;
    std::vector<double> corrupted_buf;
    std::uint64_t ordinal = block_start[c0];
    LatticeBest best;
    scan_block(kernel, q.weights(), hw, lambda, d, lattice_n, 1,
               lattice_n - c0, counts, ordinal, corrupted_buf, best);
    partial[c0] = best;
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int c0 = 0; c0 <= lattice_n; ++c0) run_block(c0);
  } else {
    for (int c0 = 0; c0 <= lattice_n; ++c0) run_block(c0);
  }

  LatticeBest best;
  for (const LatticeBest& b : partial) {
    consider(best, b.value, b.ordinal, b.counts);
  }
  std::vector<double> w(d);
  for (int i = 0; i < d; ++i) {
    w[i] = static_cast<double>(best.counts[i]) / lattice_n;
  }
  return FiniteDistribution::from_weights_repaired(std::move(w));
}

namespace {

// Least-squares snap of an estimate onto the affine set {T_r p = q,
// sum p = 1}, followed by clipping of negative round-off.
std::vector<double> affine_correct(const Eigen::MatrixXd& constraints,
                                   const Eigen::VectorXd& rhs,
                                   const std::vector<double>& estimate) {
  const int nx = static_cast<int>(estimate.size());
  Eigen::VectorXd p(nx);
  for (int i = 0; i < nx; ++i) p(i) = estimate[i];
  Eigen::VectorXd residual = constraints * p - rhs;
  Eigen::VectorXd delta =
      constraints.completeOrthogonalDecomposition().solve(residual);
  p -= delta;
  std::vector<double> out(nx);
  double sum = 0.0;
  for (int i = 0; i < nx; ++i) {
    out[i] = std::max(p(i), 0.0);
    sum += out[i];
  }
  for (int i = 0; i < nx; ++i) out[i] /= sum;
  return out;
}

double constraint_violation(const CorruptionKernel& kernel,
                            const std::vector<double>& p,
                            const FiniteDistribution& q) {
  double v = 0.0;
  for (int y = 0; y < kernel.output_size(); ++y) {
    double s = 0.0;
    for (int x = 0; x < kernel.input_size(); ++x) s += kernel(y, x) * p[x];
    v += std::abs(s - q[y]);
  }
  return v;
}

ProjectionResult closed_form_projection(const CorruptionKernel& kernel,
                                        const FiniteDistribution& q,
                                        const FiniteDistribution& h) {
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  std::vector<double> preimage_mass(ny, 0.0);
  std::vector<int> preimage_count(ny, 0);
  std::vector<int> image(nx);
  for (int x = 0; x < nx; ++x) {
    image[x] = kernel.map_of(x);
    preimage_mass[image[x]] += h[x];
    preimage_count[image[x]] += 1;
  }
  double unreachable = 0.0;
  for (int y = 0; y < ny; ++y) {
    if (q[y] > 0.0 && preimage_count[y] == 0) unreachable += q[y];
  }
  if (unreachable > 0.0) {
    throw InfeasibleError(
        "q places mass on observations outside the image of the map",
        unreachable);
  }
  std::vector<double> w(nx);
  for (int x = 0; x < nx; ++x) {
    const int y = image[x];
    if (preimage_mass[y] > 0.0) {
      w[x] = q[y] * h[x] / preimage_mass[y];
    } else {
      // Prior puts no mass on this fiber: any split attains the same
      // divergence; spread uniformly.
      w[x] = q[y] / preimage_count[y];
    }
  }
  ProjectionResult result;
  result.h_dagger = FiniteDistribution::from_weights_repaired(std::move(w));
  result.achieved_constraint_violation =
      constraint_violation(kernel, result.h_dagger.weights(), q);
  result.achieved_kl = kl_divergence(h, result.h_dagger).value;
  result.method = ProjectionMethod::closed_form;
  return result;
}

// Independent certification for small instances: scan the affine solution
// set S(q) = {anchor + V t} over a shrinking coefficient grid and minimize
// D_KL(h || p) directly.
std::vector<double> affine_grid_search(const FiniteDistribution& h,
                                       const std::vector<double>& anchor,
                                       const Eigen::MatrixXd& null_basis) {
  const int nx = static_cast<int>(anchor.size());
  const int dims = static_cast<int>(null_basis.cols());
  std::vector<double> center(dims, 0.0);
  double half_width = 1.0;
  std::vector<double> best_point = anchor;
  double best_value = kInf;
  {
    DivergenceValue at_anchor =
        kl_divergence(h, FiniteDistribution::from_weights_repaired(anchor));
    best_value = at_anchor.value;
  }
  const int steps = 100;  // per stage and dimension
  for (int stage = 0; stage < 3; ++stage) {
    std::vector<double> stage_center = center;
    std::vector<int> idx(dims, 0);
    bool done = false;
    while (!done) {
      std::vector<double> p(nx);
      bool feasible = true;
      for (int i = 0; i < nx && feasible; ++i) {
        double v = anchor[i];
        for (int t = 0; t < dims; ++t) {
          const double coeff =
              stage_center[t] + (2.0 * idx[t] / steps - 1.0) * half_width;
          v += coeff * null_basis(i, t);
        }
        if (v < -1e-12) feasible = false;
        p[i] = std::max(v, 0.0);
      }
      if (feasible) {
        double value = 0.0;
        for (int i = 0; i < nx; ++i) {
          if (h[i] == 0.0) continue;
          if (p[i] <= 0.0) {
            value = kInf;
            break;
          }
          value += h[i] * (std::log(h[i]) - std::log(p[i]));
        }
        if (value < best_value) {
          best_value = value;
          best_point = p;
          for (int t = 0; t < dims; ++t) {
            center[t] =
                stage_center[t] + (2.0 * idx[t] / steps - 1.0) * half_width;
          }
        }
      }
      int t = 0;
      while (t < dims && ++idx[t] > steps) {
        idx[t] = 0;
        ++t;
      }
      done = t == dims;
    }
    half_width = 4.0 * half_width / steps;  // zoom around the incumbent
  }
  double sum = 0.0;
  for (double v : best_point) sum += v;
  for (double& v : best_point) v /= sum;
  return best_point;
}

}  // namespace

ProjectionResult solution_set_projection(const CorruptionKernel& kernel,
                                         const FiniteDistribution& q,
                                         const FiniteDistribution& h,
                                         Exec exec) {
  if (q.size() != kernel.output_size() || h.size() != kernel.input_size()) {
    throw ShapeError("projection instance sizes do not match the kernel");
  }
  if (kernel.deterministic()) {
    return closed_form_projection(kernel, q, h);
  }

  const int nx = kernel.input_size();
  const int ny = kernel.output_size();

  // Small-lambda schedule with warm starts, then Neville extrapolation of
  // the iterates to lambda = 0.
  const std::vector<double> schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<std::vector<double>> iterates;
  FiniteDistribution start = h;
  for (double lambda : schedule) {
    SolverConfig config;
    config.lambda = lambda;
    config.gamma = 1.0;
    config.max_iterations = 4000000;
    config.fixed_point_tolerance = 1e-13;
    config.record_every = 1 << 30;
    Trajectory run;
    try {
      run = solve(kernel, q, &h, config, start, {}, exec);
    } catch (const ConfigError&) {
      double dead = 0.0;
      for (int y = 0; y < ny; ++y) {
        bool reachable = false;
        for (int x = 0; x < nx; ++x) {
          if (kernel(y, x) > 0.0) reachable = true;
        }
        if (!reachable) dead += q[y];
      }
      throw InfeasibleError(
          "q places mass on observations the kernel cannot produce", dead);
    }
    iterates.push_back(run.final_p.weights());
    start = run.final_p;
  }

  // Neville tableau evaluated at lambda = 0, elementwise over the simplex.
  std::vector<std::vector<double>> tableau = iterates;
  const int n = static_cast<int>(schedule.size());
  for (int level = 1; level < n; ++level) {
    for (int i = 0; i < n - level; ++i) {
      const double li = schedule[i];
      const double lj = schedule[i + level];
      for (int c = 0; c < nx; ++c) {
        tableau[i][c] =
            (li * tableau[i + 1][c] - lj * tableau[i][c]) / (li - lj);
      }
    }
  }
  std::vector<double> estimate = tableau[0];
  for (double& v : estimate) v = std::max(v, 0.0);

  Eigen::MatrixXd constraints(ny + 1, nx);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) constraints(y, x) = kernel(y, x);
  }
  for (int x = 0; x < nx; ++x) constraints(ny, x) = 1.0;
  Eigen::VectorXd rhs(ny + 1);
  for (int y = 0; y < ny; ++y) rhs(y) = q[y];
  rhs(ny) = 1.0;
  estimate = affine_correct(constraints, rhs, estimate);

  ProjectionResult result;
  result.method = ProjectionMethod::small_lambda_limit;
  result.achieved_constraint_violation =
      constraint_violation(kernel, estimate, q);
  if (result.achieved_constraint_violation > 1e-7) {
    throw InfeasibleError("no distribution maps to q under this kernel",
                          result.achieved_constraint_violation);
  }

  if (nx <= 3) {
    // Grid certification over the affine solution set.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
    const double cut = 1e-10 * svd.singularValues()(0);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) > cut) ++rank;
    }
    const int dims = nx - rank;
    if (dims > 0) {
      Eigen::MatrixXd null_basis = svd.matrixV().rightCols(dims);
      std::vector<double> certified =
          affine_grid_search(h, estimate, null_basis);
      double tv = 0.0;
      for (int i = 0; i < nx; ++i) tv += std::abs(certified[i] - estimate[i]);
      if (0.5 * tv > 1e-3) {
        throw Error("projection certification failed: grid disagrees by TV " +
                    std::to_string(0.5 * tv));
      }
    }
    result.method = ProjectionMethod::grid;
  }

  result.h_dagger = FiniteDistribution::from_weights_repaired(estimate);
  result.achieved_kl = kl_divergence(h, result.h_dagger).value;
  return result;
}

}  // namespace klap
