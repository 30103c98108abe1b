#pragma once

#include <vector>

#include "klap/core.hpp"
#include "klap/kernels.hpp"

namespace klap {

// Joint distribution pi(x, y) on X x Y with total mass one. Members of
// the one-sided feasible set have y-marginal fixed to a designated q.
struct Coupling {
  int input_size = 0;   // |X|
  int output_size = 0;  // |Y|
  std::vector<double> joint;  // row-major, input_size x output_size

  double operator()(int x, int y) const {
    return joint[static_cast<std::size_t>(x) * output_size + y];
  }
  std::vector<double> x_marginal() const;
  std::vector<double> y_marginal() const;
};

// Closed-form minimizer of the one-sided entropic transport problem:
// pi(x|y) proportional to p(x) exp(-c(x, y)), scaled per column so the
// y-marginal equals q exactly. Throws DegenerateInputError when some
// column normalizer vanishes (cannot happen with finite costs and a
// nonzero p; support_floor the kernel first).
Coupling inner_coupling(const FiniteDistribution& p,
                        const FiniteDistribution& q, const CostMatrix& cost);

// Transport-plus-entropy functional evaluated at an arbitrary coupling:
//   sum_{x,y} pi(x,y) c(x,y) + D_KL(pi || p (x) q).
// +infinity when pi puts mass outside the support of p (x) q.
double coupling_objective(const Coupling& pi, const FiniteDistribution& p,
                          const FiniteDistribution& q, const CostMatrix& cost);

// Value of the inner minimum: coupling_objective at the closed-form
// coupling. Differs from D_KL(q || T_r p) by the p-independent constant
// sum_y q(y) log q(y).
double phi(const FiniteDistribution& p, const FiniteDistribution& q,
           const CostMatrix& cost);

// Residual of the variational identity
//   D_KL(q || T_r p) = phi(p) + sum_y q(y) log q(y),
// with both sides computed by independent code paths. Requires a strictly
// positive kernel.
double verify_dv_identity(const CorruptionKernel& kernel,
                          const FiniteDistribution& q,
                          const FiniteDistribution& p);

}  // namespace klap
