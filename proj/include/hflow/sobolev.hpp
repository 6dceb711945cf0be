#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hflow/hermite.hpp"

namespace hflow {

// Diagonal Hermite-Sobolev norm: ||phi||_p = sqrt( sum (2|n| + d)^(2p) c_n^2 ).
double old_norm(const HermiteExpansion& phi, int p);

// Derivative-and-weight inner product
//   <phi, psi>_p = sum_{|alpha| + |beta| <= 2p} <x^alpha d^beta phi, x^alpha d^beta psi>_0
// computed in exact ladder arithmetic (no quadrature).  p must be a
// nonnegative integer; p = 0 reduces to the plain L^2 pairing.
double new_inner(const HermiteExpansion& phi, const HermiteExpansion& psi, int p);
double new_norm(const HermiteExpansion& phi, int p);

// sum_i ||v_i||_p^2 for a family of expansions (the Hilbert-Schmidt-style
// sum over noise directions).
double hs_norm_sq(std::span<const HermiteExpansion> v, int p);

// Random Schwartz-like test functions: coefficient on h_n is
//   prod_j (1 + n_j)^(-damping) * z_n,    z_n ~ N(0,1)
// with z_n addressed by the multi-index itself, so the same (seed, sample)
// pair yields nested coefficients across truncations.
struct ExpansionSampler {
  int dim = 1;
  int trunc = 16;
  double damping = 2.0;
  std::uint64_t seed = 0;

  HermiteExpansion operator()(std::uint64_t sample_index) const;
  HermiteExpansion at_truncation(std::uint64_t sample_index, int trunc_n) const;
};

struct EquivalenceReport {
  int p = 0;
  double damping = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> truncations;
  std::vector<std::vector<double>> ratios;  // [trunc][sample], new_norm / old_norm
  std::vector<double> ratio_min;            // per truncation
  std::vector<double> ratio_max;
};

// For each truncation N, draws `trials` nested samples and records the ratio
// new_norm/old_norm.  The parallel version distributes samples across
// threads; results are bitwise identical to the serial reference.
EquivalenceReport equivalence_sweep(const ExpansionSampler& sampler, int p, int trials,
                                    std::span<const int> truncations);
EquivalenceReport equivalence_sweep_reference(const ExpansionSampler& sampler, int p, int trials,
                                              std::span<const int> truncations);

// Largest relative change of the per-truncation ratio extremes between
// consecutive truncations; the equivalence diagnostic.
double max_drift(const EquivalenceReport& report);

}  // namespace hflow
