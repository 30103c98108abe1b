#pragma once

#include <cstdint>

#include "klap/core.hpp"
#include "klap/kernels.hpp"
#include "klap/rng.hpp"

namespace klap {

// Canonical desk-scale instances shared by the verification suite, the
// acceptance tests and the documentation examples.

// Two-attribute alphabet X = {(s, c) : s, c in {0, 1}} enumerated
// row-major (s major), corrupted by the deterministic projection
// (s, c) -> s. Non-injective: the c-conditional is unconstrained.
struct GrayscaleInstance {
  CorruptionKernel kernel;
  FiniteDistribution p_data;
  FiniteDistribution prior;
};
GrayscaleInstance grayscale_instance();

// Closed-form information projection for a surjective deterministic
// kernel: h_dagger(x) = q(f(x)) h(x) / h(f^{-1}(f(x))).
FiniteDistribution deterministic_projection_closed_form(
    const CorruptionKernel& kernel, const FiniteDistribution& q,
    const FiniteDistribution& h);

// Well-conditioned 2-state benchmark kernel [[0.9, 0.2], [0.1, 0.8]]
// with ground truth p_data = [0.3, 0.7].
struct TwoStateInstance {
  CorruptionKernel kernel;
  FiniteDistribution p_data;
};
TwoStateInstance two_state_instance();

// Cyclic additive-noise kernel on n = 8 whose noise spectrum vanishes at
// the alternating mode: non-injective, with additional weakly observed
// modes. Used for the finite-sample studies.
CorruptionKernel noninjective_noise_kernel();

// Injective but ill-conditioned variant: the vanished mode is restored
// with a small delta component, leaving all spectrum magnitudes nonzero
// but some close to zero.
CorruptionKernel illconditioned_noise_kernel();

// Skewed 8-state ground truth used with the two kernels above.
FiniteDistribution desk_p_data();

// Random full-support column-stochastic kernel (per-column normalized
// exponentials, sharpened so columns stay well separated).
CorruptionKernel random_kernel(RngStream& rng, int output_size,
                               int input_size);

FiniteDistribution random_distribution(RngStream& rng, int size);

}  // namespace klap
