#pragma once

#include <cstdint>
#include <vector>

#include "klap/core.hpp"
#include "klap/kernels.hpp"

namespace klap {

// Alternating-minimization parameters. `lambda` weighs the prior term of
// the objective, `gamma` in (0, 1] is the online update ratio; gamma = 1
// recovers the full batch update. The damping weight nu is derived, not
// stored: nu = (1 - gamma)(1 + lambda) / gamma (0 at gamma = 1).
struct SolverConfig {
  double lambda = 0.0;
  double gamma = 1.0;
  int max_iterations = 200000;
  double fixed_point_tolerance = 1e-10;
  int record_every = 1;
  std::uint64_t seed = 0;

  double nu() const { return (1.0 - gamma) * (1.0 + lambda) / gamma; }
  double clean_sample_weight() const { return lambda / (1.0 + lambda); }
  void validate() const;
};

// Converts the clean-sample weight w = lambda / (1 + lambda) back to
// lambda. Requires w in [0, 1).
double lambda_from_clean_weight(double w);

// One solver iterate: the current distribution p^k together with its
// posterior mixture m(x) = sum_y q(y) u_y(x) evaluated at p^k.
struct IterationState {
  FiniteDistribution p;
  FiniteDistribution mixture;
  int k = 0;
};

// Per-iteration diagnostics. kl_hdagger_p and tv_to_reference are NaN
// when the corresponding probe distribution was not supplied.
struct TrajectoryRecord {
  int k = 0;
  double objective = 0.0;       // J_lambda at p^k
  double kl_q_corrupted = 0.0;  // D_KL(q || T_r p^k)
  double kl_hdagger_p = 0.0;
  double residual = 0.0;        // fixed-point residual at p^k
  double tv_to_reference = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  FiniteDistribution final_p = FiniteDistribution::uniform(1);
  bool converged = false;
  int iterations_run = 0;
  bool p0_floored = false;  // p0 lacked full support and was mixed with
                            // 1e-9 uniform before the run
};

// Optional reference distributions recorded along the trajectory.
struct SolveProbes {
  const FiniteDistribution* h_dagger = nullptr;   // certified projection
  const FiniteDistribution* reference = nullptr;  // typically p_data
};

// m_p(x) = sum_y q(y) u_y(x) without materializing the posterior table:
// m_p(x) = p(x) * sum_y r(y|x) q(y) / (T_r p)(y). Rows with
// (T_r p)(y) = 0 follow the uniform-over-supp(p) posterior convention.
FiniteDistribution posterior_mixture(const CorruptionKernel& kernel,
                                     const FiniteDistribution& q,
                                     const FiniteDistribution& p,
                                     Exec exec = Exec::parallel);

// J_lambda(p) = D_KL(q || T_r p) + lambda * D_KL(h || p). Returns
// +infinity when a support condition fails. lambda > 0 requires h.
double objective_value(const CorruptionKernel& kernel,
                       const FiniteDistribution& q,
                       const FiniteDistribution* h, double lambda,
                       const FiniteDistribution& p,
                       Exec exec = Exec::parallel);

// One batch step: p' = (1/(1+lambda)) m_p + (lambda/(1+lambda)) h.
IterationState batch_step(const CorruptionKernel& kernel,
                         const FiniteDistribution& q,
                         const FiniteDistribution* h, double lambda,
                         const IterationState& state,
                         Exec exec = Exec::parallel);

// One online step via the damped form
//   p' = (m_p + lambda h + nu p) / (1 + lambda + nu),
// nu = (1-gamma)(1+lambda)/gamma. Reduces to batch_step at gamma = 1.
IterationState online_step(const CorruptionKernel& kernel,
                           const FiniteDistribution& q,
                           const FiniteDistribution* h, double lambda,
                           double gamma, const IterationState& state,
                           Exec exec = Exec::parallel);

IterationState make_initial_state(const CorruptionKernel& kernel,
                                  const FiniteDistribution& q,
                                  const FiniteDistribution& p0,
                                  Exec exec = Exec::parallel);

// L1 norm of (1/(1+lambda)) m_p + (lambda/(1+lambda)) h - p. Zero exactly
// at the optimum; this is the stationarity certificate the solver stops
// on, independent of gamma.
double fixed_point_residual(const CorruptionKernel& kernel,
                            const FiniteDistribution& q,
                            const FiniteDistribution* h, double lambda,
                            const FiniteDistribution& p,
                            Exec exec = Exec::parallel);

// Runs online steps until the fixed-point residual drops below tolerance
// or max_iterations is reached. p0 is mixed with 1e-9 uniform when it
// lacks full support (flagged in the trajectory). Throws ConfigError when
// the objective is not finite at p0 (remedy: support_floor the kernel).
Trajectory solve(const CorruptionKernel& kernel, const FiniteDistribution& q,
                 const FiniteDistribution* h, const SolverConfig& config,
                 const FiniteDistribution& p0, const SolveProbes& probes = {},
                 Exec exec = Exec::parallel);

// Same, with the default initialization: h when supplied, else uniform.
Trajectory solve(const CorruptionKernel& kernel, const FiniteDistribution& q,
                 const FiniteDistribution* h, const SolverConfig& config);

}  // namespace klap
