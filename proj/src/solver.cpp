#include "klap/solver.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace klap {

namespace {

constexpr std::int64_t kParallelGrain = 1 << 14;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void repair_simplex(std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  if (std::abs(s - 1.0) > kSimplexSumTol) {
    for (double& v : w) v /= s;
  }
}

double kl_weights(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    if (b[i] <= 0.0) return kInf;
    sum += a[i] * (std::log(a[i]) - std::log(b[i]));
  }
  return std::max(sum, 0.0);
}

// Fused evaluation of (T_r p)(y) and m(x) = p(x) sum_y r(y|x) q(y)/(T_r p)(y).
// Rows with (T_r p)(y) = 0 contribute their q-mass uniformly over supp(p),
// matching the posterior convention. All buffers are caller-owned so the
// solver loop runs allocation-free.
struct MixtureBuffers {
  std::vector<double> corrupted;  // |Y|
  std::vector<double> ratio;      // |Y|, q(y) / (T_r p)(y)
  std::vector<double> mixture;    // |X|
};

void compute_mixture(const CorruptionKernel& kernel,
                     const std::vector<double>& q,
                     const std::vector<double>& p, Exec exec,
                     MixtureBuffers& buf) {
  const int nx = kernel.input_size();
  const int ny = kernel.output_size();
  const std::vector<double>& e = kernel.entries();
  buf.corrupted.resize(ny);
  buf.ratio.resize(ny);
  buf.mixture.resize(nx);

  const bool parallel = exec == Exec::parallel &&
                        static_cast<std::int64_t>(nx) * ny >= kParallelGrain;

  auto forward_row = [&](int y) {
    const double* r = e.data() + static_cast<std::size_t>(y) * nx;
    double s = 0.0;
    for (int x = 0; x < nx; ++x) s += r[x] * p[x];
    buf.corrupted[y] = s;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ny; ++y) forward_row(y);
  } else {
    for (int y = 0; y < ny; ++y) forward_row(y);
  }

  double dead_mass = 0.0;
  for (int y = 0; y < ny; ++y) {
    if (buf.corrupted[y] > 0.0) {
      buf.ratio[y] = q[y] / buf.corrupted[y];
    } else {
      buf.ratio[y] = 0.0;
      dead_mass += q[y];
    }
  }

  double dead_share = 0.0;
  if (dead_mass > 0.0) {
    int support = 0;
    for (int x = 0; x < nx; ++x) {
      if (p[x] > 0.0) ++support;
    }
    dead_share = dead_mass / support;
  }

  auto mixture_col = [&](int x) {
    double s = 0.0;
    for (int y = 0; y < ny; ++y) {
      s += e[static_cast<std::size_t>(y) * nx + x] * buf.ratio[y];
    }
    double m = p[x] * s;
    if (dead_share > 0.0 && p[x] > 0.0) m += dead_share;
    buf.mixture[x] = m;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int x = 0; x < nx; ++x) mixture_col(x);
  } else {
    for (int x = 0; x < nx; ++x) mixture_col(x);
  }
}

// p' = (m + lambda h + nu p) / (1 + lambda + nu); shared by online_step
// and the solve loop so the two paths stay bitwise identical.
void damped_update(const std::vector<double>& m, const double* h,
                   const std::vector<double>& p, double lambda, double nu,
                   std::vector<double>& out) {
  const double denom = 1.0 + lambda + nu;
  out.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    double v = m[i];
    if (h != nullptr) v += lambda * h[i];
    if (nu != 0.0) v += nu * p[i];
    out[i] = v / denom;
  }
  repair_simplex(out);
}

double residual_from(const std::vector<double>& mixture, const double* h,
                     const std::vector<double>& p, double lambda) {
  const double wm = 1.0 / (1.0 + lambda);
  const double wh = lambda / (1.0 + lambda);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double target = wm * mixture[i];
    if (h != nullptr) target += wh * h[i];
    sum += std::abs(target - p[i]);
  }
  return sum;
}

void check_shapes(const CorruptionKernel& kernel, const FiniteDistribution& q,
                  const FiniteDistribution* h) {
  if (q.size() != kernel.output_size()) {
    throw ShapeError("q does not match the kernel output alphabet");
  }
  if (h != nullptr && h->size() != kernel.input_size()) {
    throw ShapeError("prior does not match the kernel input alphabet");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma outside (0, 1]");
  if (lambda < 0.0) throw DomainError("lambda must be >= 0");
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(fixed_point_tolerance > 0.0)) {
    throw ConfigError("fixed_point_tolerance must be > 0");
  }
  if (record_every < 1) throw ConfigError("record_every must be >= 1");
}

double lambda_from_clean_weight(double w) {
  if (!(w >= 0.0 && w < 1.0)) {
    throw DomainError("clean-sample weight outside [0, 1)");
  }
  return w / (1.0 - w);
}

FiniteDistribution posterior_mixture(const CorruptionKernel& kernel,
                                     const FiniteDistribution& q,
                                     const FiniteDistribution& p, Exec exec) {
  check_shapes(kernel, q, nullptr);
  if (p.size() != kernel.input_size()) {
    throw ShapeError("p does not match the kernel input alphabet");
  }
  MixtureBuffers buf;
  compute_mixture(kernel, q.weights(), p.weights(), exec, buf);
  return FiniteDistribution::from_weights_repaired(std::move(buf.mixture));
}

double objective_value(const CorruptionKernel& kernel,
                       const FiniteDistribution& q,
                       const FiniteDistribution* h, double lambda,
                       const FiniteDistribution& p, Exec exec) {
  check_shapes(kernel, q, h);
  if (lambda > 0.0 && h == nullptr) {
    throw ConfigError("lambda > 0 requires a prior distribution");
  }
  const FiniteDistribution corrupted = apply(kernel, p, exec);
  double value = kl_weights(q.weights(), corrupted.weights());
  if (lambda > 0.0) {
    value += lambda * kl_weights(h->weights(), p.weights());
  }
  return value;
}

IterationState make_initial_state(const CorruptionKernel& kernel,
                                  const FiniteDistribution& q,
                                  const FiniteDistribution& p0, Exec exec) {
  return IterationState{p0, posterior_mixture(kernel, q, p0, exec), 0};
}

IterationState batch_step(const CorruptionKernel& kernel,
                         const FiniteDistribution& q,
                         const FiniteDistribution* h, double lambda,
                         const IterationState& state, Exec exec) {
  check_shapes(kernel, q, h);
  if (lambda > 0.0 && h == nullptr) {
    throw ConfigError("lambda > 0 requires a prior distribution");
  }
  const double wm = 1.0 / (1.0 + lambda);
  const double wh = lambda / (1.0 + lambda);
  std::vector<double> next(state.p.size());
  for (int i = 0; i < state.p.size(); ++i) {
    next[i] = wm * state.mixture[i] + (h != nullptr ? wh * (*h)[i] : 0.0);
  }
  repair_simplex(next);
  FiniteDistribution p = FiniteDistribution::from_weights(std::move(next));
  FiniteDistribution m = posterior_mixture(kernel, q, p, exec);
  return IterationState{std::move(p), std::move(m), state.k + 1};
}

IterationState online_step(const CorruptionKernel& kernel,
                           const FiniteDistribution& q,
                           const FiniteDistribution* h, double lambda,
                           double gamma, const IterationState& state,
                           Exec exec) {
  check_shapes(kernel, q, h);
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma outside (0, 1]");
  if (lambda > 0.0 && h == nullptr) {
    throw ConfigError("lambda > 0 requires a prior distribution");
  }
  const double nu = (1.0 - gamma) * (1.0 + lambda) / gamma;
  std::vector<double> next;
  damped_update(state.mixture.weights(),
                h != nullptr ? h->weights().data() : nullptr,
                state.p.weights(), lambda, nu, next);
  FiniteDistribution p = FiniteDistribution::from_weights(std::move(next));
  FiniteDistribution m = posterior_mixture(kernel, q, p, exec);
  return IterationState{std::move(p), std::move(m), state.k + 1};
}

double fixed_point_residual(const CorruptionKernel& kernel,
                            const FiniteDistribution& q,
                            const FiniteDistribution* h, double lambda,
                            const FiniteDistribution& p, Exec exec) {
  const FiniteDistribution m = posterior_mixture(kernel, q, p, exec);
  return residual_from(m.weights(),
                       h != nullptr ? h->weights().data() : nullptr,
                       p.weights(), lambda);
}

Trajectory solve(const CorruptionKernel& kernel, const FiniteDistribution& q,
                 const FiniteDistribution* h, const SolverConfig& config,
                 const FiniteDistribution& p0, const SolveProbes& probes,
                 Exec exec) {
  config.validate();
  check_shapes(kernel, q, h);
  if (config.lambda > 0.0 && h == nullptr) {
    throw ConfigError("lambda > 0 requires a prior distribution");
  }
  if (p0.size() != kernel.input_size()) {
    throw ShapeError("p0 does not match the kernel input alphabet");
  }

  Trajectory out;
  std::vector<double> p = p0.weights();
  if (!p0.full_support()) {
    const double u = 1e-9 / p.size();
    for (double& v : p) v = (1.0 - 1e-9) * v + u;
    out.p0_floored = true;
  }

  const double lambda = config.lambda;
  const double nu = config.nu();
  const double* hw = h != nullptr ? h->weights().data() : nullptr;

  MixtureBuffers buf;
  compute_mixture(kernel, q.weights(), p, exec, buf);
  if (kl_weights(q.weights(), buf.corrupted) == kInf) {
    throw ConfigError(
        "objective is infinite at p0 (q has mass the kernel cannot reach); "
        "apply support_floor to the kernel");
  }

  auto record = [&](int k) {
    TrajectoryRecord rec;
    rec.k = k;
    rec.kl_q_corrupted = kl_weights(q.weights(), buf.corrupted);
    rec.objective = rec.kl_q_corrupted;
    if (lambda > 0.0) {
      rec.objective += lambda * kl_weights(h->weights(), p);
    }
    rec.residual = residual_from(buf.mixture, hw, p, lambda);
    rec.kl_hdagger_p = probes.h_dagger != nullptr
                           ? kl_weights(probes.h_dagger->weights(), p)
                           : kNaN;
    if (probes.reference != nullptr) {
      double tv = 0.0;
      for (int i = 0; i < probes.reference->size(); ++i) {
        tv += std::abs((*probes.reference)[i] - p[i]);
      }
      rec.tv_to_reference = 0.5 * tv;
    } else {
      rec.tv_to_reference = kNaN;
    }
    out.records.push_back(rec);
  };

  int k = 0;
  bool recorded = false;
  std::vector<double> next;
  while (true) {
    const double residual = residual_from(buf.mixture, hw, p, lambda);
    recorded = false;
    if (k % config.record_every == 0) {
      record(k);
      recorded = true;
    }
    if (residual < config.fixed_point_tolerance) {
      out.converged = true;
      break;
    }
    if (k >= config.max_iterations) break;
    damped_update(buf.mixture, hw, p, lambda, nu, next);
    p.swap(next);
    compute_mixture(kernel, q.weights(), p, exec, buf);
    ++k;
  }
  if (!recorded) record(k);
  out.final_p = FiniteDistribution::from_weights_repaired(std::move(p));
  out.iterations_run = k;
  return out;
}

Trajectory solve(const CorruptionKernel& kernel, const FiniteDistribution& q,
                 const FiniteDistribution* h, const SolverConfig& config) {
  const FiniteDistribution p0 =
      h != nullptr ? *h : FiniteDistribution::uniform(kernel.input_size());
  return solve(kernel, q, h, config, p0);
}

}  // namespace klap
