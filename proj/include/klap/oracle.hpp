#pragma once

#include "klap/core.hpp"
#include "klap/kernels.hpp"
#include "klap/parallel.hpp"

namespace klap {

enum class ProjectionMethod { closed_form, small_lambda_limit, grid };

// Result of projecting a prior h onto the feasible set {p : T_r p = q}
// in the information-projection sense (minimizing D_KL(h || p)).
struct ProjectionResult {
  FiniteDistribution h_dagger = FiniteDistribution::uniform(1);
  double achieved_constraint_violation = 0.0;  // L1 of T_r h_dagger - q
  double achieved_kl = 0.0;                    // D_KL(h || h_dagger)
  ProjectionMethod method = ProjectionMethod::small_lambda_limit;
};

const char* to_string(ProjectionMethod method);

// Computes h_dagger = argmin { D_KL(h || p) : T_r p = q } by running the
// solver along a decreasing lambda schedule {1e-1 .. 1e-4}, Richardson-
// extrapolating to lambda = 0, and snapping the estimate back onto the
// affine constraint set. The estimate is then certified against the
// applicable independent oracle:
//   - deterministic many-to-one kernels: the closed form
//     h_dagger(x) = q(f(x)) h(x) / h(f^{-1}(f(x))) (returned exactly);
//   - |X| <= 3: a grid scan over the affine solution set.
// Throws InfeasibleError (with the best residual) when no p satisfies
// T_r p = q within 1e-7.
ProjectionResult solution_set_projection(const CorruptionKernel& kernel,
                                         const FiniteDistribution& q,
                                         const FiniteDistribution& h,
                                         Exec exec = Exec::parallel);

// Exhaustive certification oracle: evaluates the objective on the simplex
// lattice of the given spacing and returns the best point. Enumeration is
// lexicographic in the composition counts (coordinate 0 slowest, last
// coordinate holding the remainder); ties break to the first point in
// enumeration order, also under the parallel policy. Guards: |X| <= 4,
// resolution in (0, 0.1], and a cap of 2e8 lattice points.
FiniteDistribution brute_force_minimizer(const CorruptionKernel& kernel,
                                         const FiniteDistribution& q,
                                         const FiniteDistribution* h,
                                         double lambda, double grid_resolution,
                                         Exec exec = Exec::parallel);

}  // namespace klap
