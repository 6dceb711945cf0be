#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hflow/hermite.hpp"
#include "hflow/operators.hpp"
#include "hflow/rng.hpp"

namespace hflow {

// Euler-Maruyama update of a cloud of start points through ONE Brownian path
// (the stochastic flow: every point sees the same increments).  The spec must
// be in adjoint form; its fields define dX_j = b_j(X) dt + sum_i sigma_ji(X) dB^i.
// Points are stored flat, point-major: points[i*dim + j] is coordinate j of
// point i.  The full path (all steps) is consumed.
void euler_maruyama(const OperatorSpec& adjoint_spec, std::span<double> points,
                    const BrownianPath& path);

// Pathwise pairing sample <u_t, psi> ~ sum_i W_i phi(x_i) psi(X_t^{x_i}) where
// u solves the adjoint equation du = L* u dt from u_0 = phi, the x_i are
// Gauss-Hermite nodes with total weights W_i, and X^{x_i} flows along one
// shared Brownian path.  t must be a whole number of dt steps.
double flow_pairing(const OperatorSpec& adjoint_spec, const HermiteExpansion& phi,
                    const HermiteExpansion& psi, const BrownianPath& path, int nodes = 0);
double flow_pairing(const OperatorSpec& adjoint_spec, const HermiteExpansion& phi,
                    const HermiteExpansion& psi, double t, double dt, std::uint64_t seed,
                    std::uint64_t path_index, int nodes = 0);

struct PairingResult {
  double estimate = 0.0;
  double stderr_ = 0.0;   // sample standard error of the path mean
  int paths = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> samples;  // per-path pairing values, path-index order
};

// Monte Carlo average of flow_pairing over independent paths 0..paths-1.
// Paths run in parallel into disjoint slots with a serial fixed-order
// reduction, bitwise identical to the _reference serial loop.
PairingResult mc_pairing(const OperatorSpec& adjoint_spec, const HermiteExpansion& phi,
                         const HermiteExpansion& psi, double t, double dt, int paths,
                         std::uint64_t seed, int nodes = 0);
PairingResult mc_pairing_reference(const OperatorSpec& adjoint_spec,
                                   const HermiteExpansion& phi, const HermiteExpansion& psi,
                                   double t, double dt, int paths, std::uint64_t seed,
                                   int nodes = 0);

}  // namespace hflow
