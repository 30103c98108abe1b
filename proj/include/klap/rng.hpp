#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace klap {

// Deterministic counter-based random stream. Each logical batch of draws
// owns one stream keyed by (seed, label), so results do not depend on the
// order in which batches are generated. The generator is SplitMix64 over
// a key derived from FNV-1a of the label mixed with the seed; it is
// platform-independent (no libstdc++ distribution objects involved).
class RngStream {
public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();

  // Uniform double in the open interval (0, 1); never returns 0 or 1, so
  // -log(u) is always finite and positive.
  double next_unit();

  // Index in [0, cumulative.size()) drawn from the distribution whose
  // inclusive prefix sums are `cumulative` (last entry ~ 1).
  int next_index(const std::vector<double>& cumulative);

private:
  std::uint64_t state_;
};

// Strictly positive random point on the probability simplex
// (normalized unit-rate exponentials, i.e. a flat Dirichlet draw).
std::vector<double> random_simplex_point(RngStream& rng, int size);

}  // namespace klap
