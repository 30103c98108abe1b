#include "klap/scenarios.hpp"

#include <cmath>

namespace klap {

GrayscaleInstance grayscale_instance() {
  // X enumerates (s, c) with s major: 0 = (0,0), 1 = (0,1), 2 = (1,0),
  // 3 = (1,1); the kernel keeps s and discards c.
  CorruptionKernel kernel = deterministic_map_kernel({0, 0, 1, 1}, 2);
  FiniteDistribution p_data =
      FiniteDistribution::from_weights({0.56, 0.14, 0.09, 0.21});
  FiniteDistribution prior =
      FiniteDistribution::from_weights({0.25, 0.25, 0.25, 0.25});
  return GrayscaleInstance{std::move(kernel), std::move(p_data),
                           std::move(prior)};
}

FiniteDistribution deterministic_projection_closed_form(
    const CorruptionKernel& kernel, const FiniteDistribution& q,
    const FiniteDistribution& h) {
  const int nx = kernel.input_size();
  std::vector<double> fiber_mass(kernel.output_size(), 0.0);
  std::vector<int> fiber_count(kernel.output_size(), 0);
  std::vector<int> image(nx);
  for (int x = 0; x < nx; ++x) {
    image[x] = kernel.map_of(x);
    fiber_mass[image[x]] += h[x];
    fiber_count[image[x]] += 1;
  }
  std::vector<double> w(nx);
  for (int x = 0; x < nx; ++x) {
    const int y = image[x];
    w[x] = fiber_mass[y] > 0.0 ? q[y] * h[x] / fiber_mass[y]
                               : q[y] / fiber_count[y];
  }
  return FiniteDistribution::from_weights_repaired(std::move(w));
}

TwoStateInstance two_state_instance() {
  CorruptionKernel kernel(2, 2, {0.9, 0.2, 0.1, 0.8}, "two_state");
  FiniteDistribution p_data = FiniteDistribution::from_weights({0.3, 0.7});
  return TwoStateInstance{std::move(kernel), std::move(p_data)};
}

CorruptionKernel noninjective_noise_kernel() {
  // Binomial offsets [1, 3, 3, 1]/8 on n = 8: the noise spectrum vanishes
  // at the alternating mode and stays small at the neighbouring ones, so
  // the operator is non-injective with extra weakly observed directions.
  std::vector<double> stencil(8, 0.0);
  stencil[0] = 1.0 / 8;
  stencil[1] = 3.0 / 8;
  stencil[2] = 3.0 / 8;
  stencil[3] = 1.0 / 8;
  return additive_noise_kernel(
      8, FiniteDistribution::from_weights(stencil), Boundary::cyclic);
}

CorruptionKernel illconditioned_noise_kernel() {
  // Same low-pass shape with a 10% identity component: every spectrum
  // magnitude is nonzero (injective) but several are close to zero, so
  // inverting an estimated q amplifies sampling noise badly.
  std::vector<double> stencil(8, 0.0);
  const double d = 0.1;
  stencil[0] = d + (1.0 - d) * 1.0 / 8;
  stencil[1] = (1.0 - d) * 3.0 / 8;
  stencil[2] = (1.0 - d) * 3.0 / 8;
  stencil[3] = (1.0 - d) * 1.0 / 8;
  return additive_noise_kernel(
      8, FiniteDistribution::from_weights(stencil), Boundary::cyclic);
}

FiniteDistribution desk_p_data() {
  return normalize({0.26, 0.05, 0.21, 0.03, 0.14, 0.02, 0.2, 0.09});
}

CorruptionKernel random_kernel(RngStream& rng, int output_size,
                               int input_size) {
  std::vector<double> e(static_cast<std::size_t>(output_size) * input_size);
  for (int x = 0; x < input_size; ++x) {
    double col = 0.0;
    for (int y = 0; y < output_size; ++y) {
      // Squaring the exponential draw sharpens columns, keeping random
      // instances well conditioned for the solver.
      const double v = std::pow(-std::log(rng.next_unit()), 2.0);
      e[static_cast<std::size_t>(y) * input_size + x] = v;
      col += v;
    }
    for (int y = 0; y < output_size; ++y) {
      e[static_cast<std::size_t>(y) * input_size + x] /= col;
    }
  }
  return CorruptionKernel(output_size, input_size, std::move(e), "random");
}

FiniteDistribution random_distribution(RngStream& rng, int size) {
  return FiniteDistribution::from_weights_repaired(
      random_simplex_point(rng, size));
}

}  // namespace klap
