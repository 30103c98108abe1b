#pragma once

#include <string>
#include <vector>

#include "klap/parallel.hpp"

namespace klap {

enum class VerifyScale { quick, full };

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;  // deterministic summary metric(s)
};

// Individual cross-module property checks. Each is self-contained,
// deterministic (fixed internal seeds) and returns a machine-readable
// detail string free of commas.

// Variational transport identity plus minimality of the closed-form
// coupling against random feasible couplings.
PropertyResult check_dv_identity(Exec exec = Exec::parallel);

// min_{k<=K} D_KL(q || T_r p^k) <= D_KL(h_dagger || p0) / (gamma K) at
// every K along lambda = 0 runs with independently certified h_dagger.
PropertyResult check_rate_bound(Exec exec = Exec::parallel);

// J_lambda non-increasing along every recorded trajectory; for lambda = 0
// runs, D_KL(h_dagger || p^k) non-increasing as well.
PropertyResult check_monotone_descent(Exec exec = Exec::parallel);

// Per-step agreement of online_step at gamma = 1 with batch_step.
PropertyResult check_online_batch_equivalence(Exec exec = Exec::parallel);

// The regularized optimum converges to the projection h_dagger as
// lambda decreases; certified via the deterministic closed form.
PropertyResult check_small_lambda_limit(Exec exec = Exec::parallel);

// sum_y (T_r p)(y) u_y(x) = p(x): the posterior mixture against the
// kernel's own image reproduces the prior.
PropertyResult check_bayes_consistency(Exec exec = Exec::parallel);

// Solver output against the brute-force lattice oracle on 2-state
// instances.
PropertyResult check_oracle_agreement(Exec exec = Exec::parallel);

// Solver termination with a residual certificate on randomized instances,
// re-verified through the posterior-table route.
PropertyResult check_fixed_point_certificate(Exec exec = Exec::parallel);

// Unique recovery under injective kernels; p0-dependent limit points with
// identical corrupted images under the non-injective projection kernel.
PropertyResult check_uniqueness(Exec exec = Exec::parallel);

// Finite-sample orderings: prior-weight sweep, clean-count sweep, and
// the value of a small clean set under an ill-conditioned kernel.
PropertyResult check_qualitative_recovery(Exec exec = Exec::parallel);

// Recovery error non-increasing in the corrupted sample count (full
// scale; draws up to 1e6 samples).
PropertyResult check_sampling_consistency(Exec exec = Exec::parallel);

// The cmd-verify suite: identity, rate bound, descent, equivalence,
// projection limit, Bayes consistency, oracle agreement; full scale adds
// the sampling consistency study. Byte-deterministic per scale.
std::vector<PropertyResult> run_verify_suite(VerifyScale scale,
                                             Exec exec = Exec::parallel);

// CSV artifact, header "property,pass,detail".
std::string verify_report_to_csv(const std::vector<PropertyResult>& results);

bool all_passed(const std::vector<PropertyResult>& results);

}  // namespace klap
