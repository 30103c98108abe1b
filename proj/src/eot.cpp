#include "klap/eot.hpp"

#include <cmath>
#include <limits>

namespace klap {

namespace {

void check_instance(const FiniteDistribution& p, const FiniteDistribution& q,
                    const CostMatrix& cost) {
  if (p.size() != cost.input_size || q.size() != cost.output_size) {
    throw ShapeError("cost matrix does not match the marginals");
  }
}

}  // namespace

std::vector<double> Coupling::x_marginal() const {
  std::vector<double> m(input_size, 0.0);
  for (int x = 0; x < input_size; ++x) {
    for (int y = 0; y < output_size; ++y) m[x] += (*this)(x, y);
  }
  return m;
}

std::vector<double> Coupling::y_marginal() const {
  std::vector<double> m(output_size, 0.0);
  for (int x = 0; x < input_size; ++x) {
    for (int y = 0; y < output_size; ++y) m[y] += (*this)(x, y);
  }
  return m;
}

Coupling inner_coupling(const FiniteDistribution& p,
                        const FiniteDistribution& q, const CostMatrix& cost) {
  check_instance(p, q, cost);
  const int nx = p.size();
  const int ny = q.size();
  Coupling pi;
  pi.input_size = nx;
  pi.output_size = ny;
  pi.joint.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  // Column y of the conditional is p(x) e^{-c(x,y)} / Z(y); scaling by
  // q(y) pins the y-marginal.
  for (int y = 0; y < ny; ++y) {
    double z = 0.0;
    for (int x = 0; x < nx; ++x) z += p[x] * std::exp(-cost(x, y));
    if (z <= 0.0) {
      throw DegenerateInputError(
          "degenerate cost column: no mass reaches observation " +
          std::to_string(y));
    }
    const double scale = q[y] / z;
    for (int x = 0; x < nx; ++x) {
      pi.joint[static_cast<std::size_t>(x) * ny + y] =
          p[x] * std::exp(-cost(x, y)) * scale;
    }
  }
  return pi;
}

double coupling_objective(const Coupling& pi, const FiniteDistribution& p,
                          const FiniteDistribution& q,
                          const CostMatrix& cost) {
  check_instance(p, q, cost);
  if (pi.input_size != p.size() || pi.output_size != q.size()) {
    throw ShapeError("coupling does not match the marginals");
  }
  double transport = 0.0;
  double entropic = 0.0;
  for (int x = 0; x < pi.input_size; ++x) {
    for (int y = 0; y < pi.output_size; ++y) {
      const double m = pi(x, y);
      if (m == 0.0) continue;
      const double ref = p[x] * q[y];
      if (ref <= 0.0) return std::numeric_limits<double>::infinity();
      transport += m * cost(x, y);
      entropic += m * std::log(m / ref);
    }
  }
  return transport + entropic;
}

double phi(const FiniteDistribution& p, const FiniteDistribution& q,
           const CostMatrix& cost) {
  return coupling_objective(inner_coupling(p, q, cost), p, q, cost);
}

double verify_dv_identity(const CorruptionKernel& kernel,
                          const FiniteDistribution& q,
                          const FiniteDistribution& p) {
  const FiniteDistribution corrupted = apply(kernel, p);
  const DivergenceValue lhs = kl_divergence(q, corrupted);
  double constant = 0.0;  // sum_y q(y) log q(y), 0 log 0 = 0
  for (int y = 0; y < q.size(); ++y) {
    if (q[y] > 0.0) constant += q[y] * std::log(q[y]);
  }
  const double rhs = phi(p, q, cost_matrix(kernel)) + constant;
  return std::abs(lhs.value - rhs);
}

}  // namespace klap
