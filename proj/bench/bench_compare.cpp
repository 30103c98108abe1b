// Compares the serial reference implementations against the OpenMP
// kernels on sizable instances and reports timings plus the maximum
// absolute deviation (expected to be exactly zero: the parallel loops
// keep the serial reduction order).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "klap/kernels.hpp"
#include "klap/oracle.hpp"
#include "klap/parallel.hpp"
#include "klap/rng.hpp"
#include "klap/scenarios.hpp"
#include "klap/solver.hpp"

namespace {

using klap::Exec;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const double t0 = now_seconds();
    f();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

void report(const char* name, double serial, double parallel, double diff) {
  std::printf("%-22s serial %8.4fs  parallel %8.4fs  speedup %5.2fx  "
              "max|diff| %g\n",
              name, serial, parallel, serial / parallel, diff);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", klap::thread_count());
  klap::RngStream rng(7, "bench");

  {
    const int n = 1536;
    const klap::CorruptionKernel kernel = klap::random_kernel(rng, n, n);
    const klap::FiniteDistribution p = klap::random_distribution(rng, n);
    klap::FiniteDistribution out_s = p, out_p = p;
    const double ts = best_of(3, [&] { out_s = apply(kernel, p, Exec::serial); });
    const double tp = best_of(3, [&] { out_p = apply(kernel, p, Exec::parallel); });
    report("apply 1536x1536", ts, tp, max_abs_diff(out_s.weights(), out_p.weights()));
  }

  {
    const int n = 1024;
    const klap::CorruptionKernel kernel = klap::random_kernel(rng, n, n);
    const klap::FiniteDistribution p = klap::random_distribution(rng, n);
    klap::Posterior post_s, post_p;
    const double ts = best_of(3, [&] { post_s = posterior(kernel, p, Exec::serial); });
    const double tp = best_of(3, [&] { post_p = posterior(kernel, p, Exec::parallel); });
    report("posterior 1024x1024", ts, tp, max_abs_diff(post_s.table, post_p.table));
  }

  {
    const int ny = 1024, nx = 768;
    const klap::CorruptionKernel kernel = klap::random_kernel(rng, ny, nx);
    const klap::FiniteDistribution p_data = klap::random_distribution(rng, nx);
    const klap::FiniteDistribution q = apply(kernel, p_data);
    klap::SolverConfig config;
    config.max_iterations = 40;
    config.fixed_point_tolerance = 1e-15;
    config.record_every = 1 << 30;
    const klap::FiniteDistribution p0 = klap::FiniteDistribution::uniform(nx);
    klap::Trajectory t_s, t_p;
    const double ts = best_of(2, [&] {
      t_s = solve(kernel, q, nullptr, config, p0, {}, Exec::serial);
    });
    const double tp = best_of(2, [&] {
      t_p = solve(kernel, q, nullptr, config, p0, {}, Exec::parallel);
    });
    report("solve 40it 1024x768", ts, tp,
           max_abs_diff(t_s.final_p.weights(), t_p.final_p.weights()));
  }

  {
    const klap::CorruptionKernel kernel3 = klap::random_kernel(rng, 4, 3);
    const klap::FiniteDistribution p_data = klap::random_distribution(rng, 3);
    const klap::FiniteDistribution q = apply(kernel3, p_data);
    klap::FiniteDistribution best_s = p_data, best_p = p_data;
    const double ts = best_of(2, [&] {
      best_s = brute_force_minimizer(kernel3, q, nullptr, 0.0, 1e-3,
                                     Exec::serial);
    });
    const double tp = best_of(2, [&] {
      best_p = brute_force_minimizer(kernel3, q, nullptr, 0.0, 1e-3,
                                     Exec::parallel);
    });
    report("grid |X|=3 res 1e-3", ts, tp,
           max_abs_diff(best_s.weights(), best_p.weights()));
  }

  return 0;
}
