#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hflow/operators.hpp"
#include "hflow/rng.hpp"

namespace hflow {

// Time discretization of the coefficient ODE/SDE after Galerkin projection.
enum class Scheme { Explicit, Implicit, CrankNicolson };

double scheme_theta(Scheme scheme);

// Theta-weighted stepper for du = L u dt (+ sum_i A_i u dB_i).  The square
// blocks of the assembled operators drive the dynamics inside the box; the
// tail blocks only feed the running estimate of what the projection discards:
//   tail += dt * ||T_L u||_0 + sum_i |dB_i| * ||T_{A_i} u||_0.
// The implicit matrix I - theta dt L is factored once at construction.
class ThetaStepper {
 public:
  ThetaStepper(const OperatorSpec& spec, int trunc, double dt, double theta, int nodes = 0);

  int dim() const { return dim_; }
  int truncation() const { return trunc_; }
  double dt() const { return dt_; }
  double theta() const { return theta_; }
  Eigen::Index size() const { return lsq_.rows(); }

  // u_{n+1} solves (I - theta dt L) u_{n+1} = (I + (1-theta) dt L) u_n.
  Eigen::VectorXd step_deterministic(const Eigen::VectorXd& u, double* tail) const;

  // Semi-implicit Euler-Maruyama: the noise term enters explicitly,
  // (I - theta dt L) Y_{n+1} = (I + (1-theta) dt L) Y_n + sum_i (A_i Y_n) dB_i.
  Eigen::VectorXd step_stochastic(const Eigen::VectorXd& u,
                                  std::span<const double> db, double* tail) const;

 private:
  int dim_ = 0;
  int trunc_ = 0;
  double dt_ = 0.0;
  double theta_ = 0.0;
  Eigen::MatrixXd lsq_, ltail_, explicit_mat_;
  std::vector<Eigen::MatrixXd> asq_, atail_;
  Eigen::FullPivLU<Eigen::MatrixXd> implicit_lu_;
  bool implicit_needed_ = false;
};

struct EvolutionResult {
  std::vector<double> times;              // snapshot times, final time always last
  std::vector<HermiteExpansion> states;   // one expansion per snapshot
  double tail_estimate = 0.0;             // accumulated projection leakage bound
};

// Deterministic Galerkin solve of du = L u dt from phi0 (resized to `trunc`)
// over [0, t_final].  t_final must be an integer number of dt steps, and each
// snapshot time must land on a step boundary; the final state is always
// recorded even when `snapshot_times` is empty.
EvolutionResult solve_pde(const OperatorSpec& spec, const HermiteExpansion& phi0, int trunc,
                          double t_final, double dt, Scheme scheme,
                          std::span<const double> snapshot_times = {}, int nodes = 0);

// Stochastic Galerkin solve of dY = L Y dt + sum_i A_i Y dB_i along one fixed
// Brownian path (the path supplies dt and the number of steps).
EvolutionResult solve_spde(const OperatorSpec& spec, const HermiteExpansion& phi0, int trunc,
                           const BrownianPath& path, double theta = 0.5,
                           std::span<const double> snapshot_times = {}, int nodes = 0);

struct EnsembleResult {
  HermiteExpansion mean;            // coefficient-wise sample mean at t_final
  std::vector<double> stderr_;      // per-coefficient standard error, flat order
  double pooled_se = 0.0;           // sqrt(sum of squared standard errors)
  double tail_mean = 0.0;           // average per-path tail estimate
  int paths = 0;
};

// Monte Carlo mean of solve_spde endpoints over `paths` independent Brownian
// paths (path_index = 0..paths-1 under one seed).  Paths are simulated in
// parallel into disjoint slots and reduced serially in fixed order, so the
// result is bitwise reproducible at any thread count; the _reference variant
// is the serial loop it must agree with.
EnsembleResult ensemble_mean(const OperatorSpec& spec, const HermiteExpansion& phi0,
                             int trunc, double t_final, double dt, int paths,
                             std::uint64_t seed, double theta = 0.5, int nodes = 0);
EnsembleResult ensemble_mean_reference(const OperatorSpec& spec, const HermiteExpansion& phi0,
                                       int trunc, double t_final, double dt, int paths,
                                       std::uint64_t seed, double theta = 0.5, int nodes = 0);

}  // namespace hflow
