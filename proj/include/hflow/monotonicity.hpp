#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hflow/operators.hpp"
#include "hflow/sobolev.hpp"

namespace hflow {

// Left-hand side of the monotonicity inequality at order p,
//   2 <phi, L phi>_p + sum_i ||A_i phi||_p^2,
// with both operators projected to truncation N+2.  For a standard-form heat
// pair (sigma = I, f = g = h = 0) at p = 0 this cancels to rounding noise.
double monotonicity_lhs(const OperatorSpec& spec, const HermiteExpansion& phi, int p,
                        int nodes = 0);

struct MonotonicityReport {
  int p = 0;
  std::uint64_t seed = 0;
  std::vector<int> truncations;
  std::vector<std::vector<double>> ratios;  // [trunc][sample], LHS / ||phi||_p^2
  std::vector<double> sup_ratio;            // per truncation, signed supremum
  std::vector<double> sup_abs_ratio;        // per truncation, sup |ratio|
  bool bounded_growth = false;              // sup stable across consecutive truncations
};

// Ratio statistics over sampled expansions at several truncations.  The
// growth verdict accepts sup(N_{k+1}) <= sup(N_k) + growth_factor*|sup(N_k)|
// + slack for every consecutive pair.  Parallel over samples; bitwise equal
// to the serial reference.
MonotonicityReport estimate_constant(const OperatorSpec& spec, int p,
                                     const ExpansionSampler& sampler, int trials,
                                     std::span<const int> truncations, int nodes = 0,
                                     double growth_factor = 0.2, double growth_slack = 1e-8);
MonotonicityReport estimate_constant_reference(const OperatorSpec& spec, int p,
                                               const ExpansionSampler& sampler, int trials,
                                               std::span<const int> truncations, int nodes = 0,
                                               double growth_factor = 0.2,
                                               double growth_slack = 1e-8);

struct OrderReductionResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_error = 0.0;
};

// One-dimensional order-reduction identity for a positive integer k:
//   <f d^beta phi, d^(beta+2k-1) phi>_0
//     = -1/2 sum_{r=1}^{2k-1} C(2k-1, r) <d^r f d^(beta+2k-1-r) phi, d^beta phi>_0.
// Both sides are evaluated by exact ladder calculus plus quadrature for the
// field products; `nodes` = 0 picks an enlarged rule (the identity involves
// analytic-but-not-entire fields like tanh whose products need extra nodes).
OrderReductionResult order_reduction_check(const CoefficientFunction& f, int beta, int k,
                                           const HermiteExpansion& phi, int nodes = 0);

// General-dimension form: k is a multi-index with k_j >= 1 and |k - e_j| odd;
// the identity reduces the derivative imbalance kappa = k - e_j:
//   <f d^beta phi, d^(beta+kappa) phi>_0
//     = -1/2 sum_{0 < r <= kappa} C(kappa, r) <d^r f d^(beta+kappa-r) phi, d^beta phi>_0.
OrderReductionResult order_reduction_check_multi(const CoefficientFunction& f,
                                                 const MultiIndex& beta, const MultiIndex& k,
                                                 int j, const HermiteExpansion& phi,
                                                 int nodes = 0);

}  // namespace hflow
