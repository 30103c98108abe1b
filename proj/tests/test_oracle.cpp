#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "klap/oracle.hpp"
#include "klap/rng.hpp"
#include "klap/scenarios.hpp"
#include "klap/solver.hpp"

using namespace klap;

namespace {

SolverConfig tight_config() {
  SolverConfig config;
  config.max_iterations = 500000;
  config.fixed_point_tolerance = 1e-12;
  config.record_every = 1 << 30;
  return config;
}

// Instance with a one-dimensional solution set: rank([R; 1]) = 2 on 3
// clean symbols. The zero-sum nullspace direction is v ~ (1, 1.5, -2.5)
// (solved by hand from 0.8a + 0.3b + 0.5c = 0, a + b + c = 0).
CorruptionKernel wide_kernel() {
  return CorruptionKernel(2, 3, {0.8, 0.3, 0.5, 0.2, 0.7, 0.5}, "wide");
}

}  // namespace

TEST_CASE("lattice minimizer on the identity kernel snaps to q") {
  const auto q = FiniteDistribution::from_weights({0.3, 0.7});
  const auto best =
      brute_force_minimizer(identity_kernel(2), q, nullptr, 0.0, 0.01);
  CHECK(best[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(best[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("flat objective resolves ties to the first enumerated point") {
  // Constant kernel: every lattice point attains the same value, so the
  // documented tie-break (first point in enumeration order) decides. The
  // enumeration ascends in the leading coordinates, leaving the remainder
  // in the last one: the first point is (0, ..., 0, 1).
  const auto constant = deterministic_map_kernel({0, 0, 0}, 2);
  const auto q = FiniteDistribution::point_mass(2, 0);
  const auto best = brute_force_minimizer(constant, q, nullptr, 0.0, 0.1);
  CHECK(best[0] == 0.0);
  CHECK(best[1] == 0.0);
  CHECK(best[2] == 1.0);
}

TEST_CASE("lattice minimizer guards its scale") {
  const auto q = FiniteDistribution::uniform(2);
  CHECK_THROWS_AS(
      brute_force_minimizer(identity_kernel(5), FiniteDistribution::uniform(5),
                            nullptr, 0.0, 0.1),
      ScaleGuardError);
  CHECK_THROWS_AS(
      brute_force_minimizer(identity_kernel(2), q, nullptr, 0.0, 0.2),
      DomainError);
  CHECK_THROWS_AS(
      brute_force_minimizer(identity_kernel(2), q, nullptr, 0.0, -0.1),
      DomainError);
  CHECK_THROWS_AS(
      brute_force_minimizer(identity_kernel(4), FiniteDistribution::uniform(4),
                            nullptr, 0.0, 1e-4),
      ScaleGuardError);
}

TEST_CASE("solver matches the lattice oracle on 2-state instances") {
  const auto two = two_state_instance();
  RngStream rng(19, "oracle2");
  for (int trial = 0; trial < 5; ++trial) {
    const auto p_data = random_distribution(rng, 2);
    const auto q = apply(two.kernel, p_data);
    const double lambda = trial % 2 == 0 ? 0.0 : 0.4;
    const auto h = random_distribution(rng, 2);
    const FiniteDistribution* hp = lambda > 0.0 ? &h : nullptr;
    SolverConfig config = tight_config();
    config.lambda = lambda;
    const Trajectory t = solve(two.kernel, q, hp, config,
                               FiniteDistribution::uniform(2));
    const auto oracle =
        brute_force_minimizer(two.kernel, q, hp, lambda, 1e-4);
    CHECK(total_variation(t.final_p, oracle) <= 1e-4);
    const double gap =
        std::abs(objective_value(two.kernel, q, hp, lambda, t.final_p) -
                 objective_value(two.kernel, q, hp, lambda, oracle));
    CHECK(gap <= 1e-3);  // 10x the lattice resolution in objective value
  }
}

TEST_CASE("projection onto a singleton solution set returns the truth") {
  RngStream rng(20, "proj_singleton");
  const auto kernel = random_kernel(rng, 6, 4);
  REQUIRE(is_identifiable(kernel).injective);
  const auto p_data = random_distribution(rng, 4);
  const auto q = apply(kernel, p_data);
  for (int i = 0; i < 3; ++i) {
    const auto h = random_distribution(rng, 4);
    const ProjectionResult result = solution_set_projection(kernel, q, h);
    CHECK(total_variation(result.h_dagger, p_data) < 1e-6);
    CHECK(result.achieved_constraint_violation < 1e-7);
  }
}

TEST_CASE("deterministic kernels use the exact fiber closed form") {
  const auto gray = grayscale_instance();
  const auto q = apply(gray.kernel, gray.p_data);
  const auto h = FiniteDistribution::from_weights({0.1, 0.3, 0.12, 0.48});
  const ProjectionResult result =
      solution_set_projection(gray.kernel, q, h);
  CHECK(result.method == ProjectionMethod::closed_form);
  CHECK(result.achieved_constraint_violation < 1e-12);
  // h_dagger(s, c) = q(s) h(c|s).
  const double qs0 = q[0], qs1 = q[1];
  CHECK(result.h_dagger[0] == doctest::Approx(qs0 * 0.25).epsilon(1e-12));
  CHECK(result.h_dagger[1] == doctest::Approx(qs0 * 0.75).epsilon(1e-12));
  CHECK(result.h_dagger[2] == doctest::Approx(qs1 * 0.20).epsilon(1e-12));
  CHECK(result.h_dagger[3] == doctest::Approx(qs1 * 0.80).epsilon(1e-12));
  CHECK(result.achieved_kl ==
        doctest::Approx(kl_divergence(h, result.h_dagger).value));
}

TEST_CASE("1-dimensional solution set: grid and small-lambda limit agree") {
  const auto kernel = wide_kernel();
  const auto p_data = FiniteDistribution::from_weights({0.3, 0.4, 0.3});
  const auto q = apply(kernel, p_data);
  const auto h = FiniteDistribution::from_weights({0.2, 0.5, 0.3});
  const ProjectionResult result = solution_set_projection(kernel, q, h);
  CHECK(result.method == ProjectionMethod::grid);
  CHECK(result.achieved_constraint_violation < 1e-7);

  // Independent scan of the feasible segment p = h_dagger + t v at
  // resolution 1e-4 in the coefficient.
  const double vraw[3] = {1.0, 1.5, -2.5};
  const double norm = std::sqrt(1.0 + 1.5 * 1.5 + 2.5 * 2.5);
  double best_value = kl_divergence(h, result.h_dagger).value;
  double best_t = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    const double t = i * 1e-4;
    std::vector<double> w(3);
    bool feasible = true;
    for (int c = 0; c < 3; ++c) {
      w[c] = result.h_dagger[c] + t * vraw[c] / norm;
      if (w[c] < 0.0) feasible = false;
    }
    if (!feasible) continue;
    double value = 0.0;
    for (int c = 0; c < 3; ++c) {
      value += h[c] * (std::log(h[c]) - std::log(w[c]));
    }
    if (value < best_value) {
      best_value = value;
      best_t = t;
    }
  }
  // The scan's best point sits within one resolution step of the
  // projection estimate.
  CHECK(std::abs(best_t) <= 2e-4);

  SUBCASE("the regularized optimum is initialization independent") {
    RngStream rng(21, "proj_unique");
    FiniteDistribution reference = result.h_dagger;
    SolverConfig config = tight_config();
    config.lambda = 1e-4;
    config.fixed_point_tolerance = 1e-13;
    config.max_iterations = 4000000;
    bool first = true;
    for (int init = 0; init < 5; ++init) {
      const Trajectory t = solve(kernel, q, &h, config,
                                 random_distribution(rng, 3));
      if (first) {
        reference = t.final_p;
        first = false;
      } else {
        CHECK(total_variation(t.final_p, reference) < 1e-6);
      }
    }
    // And the small-lambda optimum approximates the projection.
    CHECK(total_variation(reference, result.h_dagger) < 2e-4);
  }
}

TEST_CASE("projection of the prior decreases along the lambda schedule") {
  const auto kernel = wide_kernel();
  const auto p_data = FiniteDistribution::from_weights({0.3, 0.4, 0.3});
  const auto q = apply(kernel, p_data);
  const auto h = FiniteDistribution::from_weights({0.2, 0.5, 0.3});
  const ProjectionResult projection = solution_set_projection(kernel, q, h);
  double previous = 1e300;
  for (double lambda : {1e-1, 1e-2, 1e-3, 1e-4}) {
    SolverConfig config = tight_config();
    config.lambda = lambda;
    config.fixed_point_tolerance = 1e-13;
    config.max_iterations = 4000000;
    const Trajectory t = solve(kernel, q, &h, config, h);
    const double div = kl_divergence(projection.h_dagger, t.final_p).value;
    CHECK(div <= previous + 1e-12);
    previous = div;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("infeasible q raises a constraint error with the residual") {
  SUBCASE("deterministic kernel with unreachable observations") {
    const auto narrow = deterministic_map_kernel({0, 0}, 2);
    const auto q = FiniteDistribution::from_weights({0.9, 0.1});
    const auto h = FiniteDistribution::uniform(2);
    CHECK_THROWS_AS(solution_set_projection(narrow, q, h), InfeasibleError);
    try {
      solution_set_projection(narrow, q, h);
    } catch (const InfeasibleError& err) {
      CHECK(err.best_residual() == doctest::Approx(0.1).epsilon(1e-12));
    }
  }
  SUBCASE("full-support kernel with q outside the image polytope") {
    const auto two = two_state_instance();
    const auto q = FiniteDistribution::from_weights({0.05, 0.95});
    const auto h = FiniteDistribution::uniform(2);
    CHECK_THROWS_AS(solution_set_projection(two.kernel, q, h),
                    InfeasibleError);
    try {
      solution_set_projection(two.kernel, q, h);
    } catch (const InfeasibleError& err) {
      // Nearest image point is the column [0.2, 0.8]: L1 distance 0.3.
      CHECK(err.best_residual() == doctest::Approx(0.3).epsilon(1e-3));
    }
  }
}

TEST_CASE("projection method labels") {
  CHECK(std::string(to_string(ProjectionMethod::closed_form)) ==
        "closed_form");
  CHECK(std::string(to_string(ProjectionMethod::small_lambda_limit)) ==
        "small_lambda_limit");
  CHECK(std::string(to_string(ProjectionMethod::grid)) == "grid");
}
