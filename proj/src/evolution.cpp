#include "hflow/evolution.hpp"

#include <cmath>
#include <stdexcept>

#include "hflow/parallel.hpp"

namespace hflow {

double scheme_theta(Scheme scheme) {
  switch (scheme) {
    case Scheme::Explicit: return 0.0;
    case Scheme::Implicit: return 1.0;
    case Scheme::CrankNicolson: return 0.5;
  }
  throw std::invalid_argument("scheme_theta: unknown scheme");
}

ThetaStepper::ThetaStepper(const OperatorSpec& spec, int trunc, double dt, double theta,
                           int nodes)
    : dim_(spec.dim), trunc_(trunc), dt_(dt), theta_(theta) {
  if (trunc < 0) throw std::invalid_argument("ThetaStepper: truncation must be >= 0");
  if (dt <= 0.0) throw std::invalid_argument("ThetaStepper: dt must be positive");
  if (theta < 0.0 || theta > 1.0) {
    throw std::invalid_argument("ThetaStepper: theta must lie in [0, 1]");
  }

  AssembledOperators ops = assemble(spec, trunc, nodes);
  lsq_ = ops.L.square_block();
  ltail_ = ops.L.tail_block();
  asq_.reserve(ops.A.size());
  atail_.reserve(ops.A.size());
  for (const OperatorMatrix& a : ops.A) {
    asq_.push_back(a.square_block());
    atail_.push_back(a.tail_block());
  }

  const Eigen::Index n = lsq_.rows();
  explicit_mat_ = Eigen::MatrixXd::Identity(n, n) + (1.0 - theta) * dt * lsq_;
  implicit_needed_ = theta > 0.0;
  if (implicit_needed_) {
    Eigen::MatrixXd implicit_mat = Eigen::MatrixXd::Identity(n, n) - theta * dt * lsq_;
    implicit_lu_.compute(implicit_mat);
    if (!implicit_lu_.isInvertible()) {
      throw std::runtime_error(
          "ThetaStepper: implicit matrix I - theta dt L is singular; reduce dt");
    }
  }
}

Eigen::VectorXd ThetaStepper::step_deterministic(const Eigen::VectorXd& u,
                                                 double* tail) const {
  if (u.size() != lsq_.rows()) {
    throw std::invalid_argument("ThetaStepper: state size does not match the box");
  }
  if (tail != nullptr) *tail += dt_ * (ltail_ * u).norm();
  Eigen::VectorXd rhs = explicit_mat_ * u;
  return implicit_needed_ ? implicit_lu_.solve(rhs) : rhs;
}

Eigen::VectorXd ThetaStepper::step_stochastic(const Eigen::VectorXd& u,
                                              std::span<const double> db,
                                              double* tail) const {
  if (u.size() != lsq_.rows()) {
    throw std::invalid_argument("ThetaStepper: state size does not match the box");
  }
  if (static_cast<int>(db.size()) != static_cast<int>(asq_.size())) {
    throw std::invalid_argument("ThetaStepper: need one increment per noise direction");
  }
  if (tail != nullptr) {
    double t = dt_ * (ltail_ * u).norm();
    for (std::size_t i = 0; i < atail_.size(); ++i) {
      t += std::abs(db[i]) * (atail_[i] * u).norm();
    }
    *tail += t;
  }
  Eigen::VectorXd rhs = explicit_mat_ * u;
  for (std::size_t i = 0; i < asq_.size(); ++i) rhs += db[i] * (asq_[i] * u);
  return implicit_needed_ ? implicit_lu_.solve(rhs) : rhs;
}

namespace {

// Map a time to its step index, insisting it lies on the grid k*dt.
int step_of_time(double t, double dt, int steps, const char* what) {
  const double raw = t / dt;
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) > 1e-9 * std::max(1.0, std::abs(raw))) {
    throw std::invalid_argument(std::string(what) + " must be a whole number of dt steps");
  }
  const int k = static_cast<int>(rounded);
  if (k < 0 || k > steps) {
    throw std::invalid_argument(std::string(what) + " lies outside [0, t_final]");
  }
  return k;
}

Eigen::VectorXd initial_vector(const HermiteExpansion& phi0, int dim, int trunc) {
  if (phi0.dim() != dim) {
    throw std::invalid_argument("evolution: initial state dimension mismatch");
  }
  HermiteExpansion resized = phi0.resized(trunc);
  const std::size_t n = box_size(dim, trunc);
  Eigen::VectorXd u(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) u[static_cast<Eigen::Index>(i)] = resized.flat(i);
  return u;
}

HermiteExpansion to_expansion(const Eigen::VectorXd& u, int dim, int trunc) {
  HermiteExpansion out(dim, trunc);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    out.flat(static_cast<std::size_t>(i)) = u[i];
  }
  return out;
}

// Sorted, validated snapshot schedule as step indices; the final step is
// always present exactly once.
std::vector<int> snapshot_steps(std::span<const double> snapshot_times, double dt,
                                int steps) {
  std::vector<int> marks;
  marks.reserve(snapshot_times.size() + 1);
  int prev = -1;
  for (double t : snapshot_times) {
    const int k = step_of_time(t, dt, steps, "snapshot time");
    if (k <= prev) {
      throw std::invalid_argument("snapshot times must be strictly increasing");
    }
    marks.push_back(k);
    prev = k;
  }
  if (marks.empty() || marks.back() != steps) marks.push_back(steps);
  return marks;
}

}  // namespace

EvolutionResult solve_pde(const OperatorSpec& spec, const HermiteExpansion& phi0, int trunc,
                          double t_final, double dt, Scheme scheme,
                          std::span<const double> snapshot_times, int nodes) {
  if (t_final <= 0.0) throw std::invalid_argument("solve_pde: t_final must be positive");
  if (dt <= 0.0) throw std::invalid_argument("solve_pde: dt must be positive");
  const int steps = step_of_time(t_final, dt, 1 << 30, "t_final");
  if (steps == 0) throw std::invalid_argument("solve_pde: t_final must be at least one step");
  const std::vector<int> marks = snapshot_steps(snapshot_times, dt, steps);

  ThetaStepper stepper(spec, trunc, dt, scheme_theta(scheme), nodes);
  Eigen::VectorXd u = initial_vector(phi0, spec.dim, trunc);

  EvolutionResult result;
  result.times.reserve(marks.size());
  result.states.reserve(marks.size());
  std::size_t next_mark = 0;
  if (marks[0] == 0) {
    result.times.push_back(0.0);
    result.states.push_back(to_expansion(u, spec.dim, trunc));
    ++next_mark;
  }
  for (int k = 1; k <= steps; ++k) {
    u = stepper.step_deterministic(u, &result.tail_estimate);
    if (next_mark < marks.size() && marks[next_mark] == k) {
      result.times.push_back(k * dt);
      result.states.push_back(to_expansion(u, spec.dim, trunc));
      ++next_mark;
    }
  }
  return result;
}

EvolutionResult solve_spde(const OperatorSpec& spec, const HermiteExpansion& phi0, int trunc,
                           const BrownianPath& path, double theta,
                           std::span<const double> snapshot_times, int nodes) {
  if (path.dim() != spec.dim) {
    throw std::invalid_argument("solve_spde: path dimension must match the operator");
  }
  const int steps = path.steps();
  const double dt = path.dt();
  const std::vector<int> marks = snapshot_steps(snapshot_times, dt, steps);

  ThetaStepper stepper(spec, trunc, dt, theta, nodes);
  Eigen::VectorXd u = initial_vector(phi0, spec.dim, trunc);

  EvolutionResult result;
  std::size_t next_mark = 0;
  if (marks[0] == 0) {
    result.times.push_back(0.0);
    result.states.push_back(to_expansion(u, spec.dim, trunc));
    ++next_mark;
  }
  for (int k = 0; k < steps; ++k) {
    u = stepper.step_stochastic(u, path.step_increments(k), &result.tail_estimate);
    if (next_mark < marks.size() && marks[next_mark] == k + 1) {
      result.times.push_back((k + 1) * dt);
      result.states.push_back(to_expansion(u, spec.dim, trunc));
      ++next_mark;
    }
  }
  return result;
}

namespace {

EnsembleResult ensemble_impl(const OperatorSpec& spec, const HermiteExpansion& phi0,
                             int trunc, double t_final, double dt, int paths,
                             std::uint64_t seed, double theta, int nodes, bool parallel) {
  if (paths < 1) throw std::invalid_argument("ensemble_mean: need at least one path");
  const int steps = step_of_time(t_final, dt, 1 << 30, "t_final");
  if (steps == 0) {
    throw std::invalid_argument("ensemble_mean: t_final must be at least one step");
  }

  // One factorization shared across paths; FullPivLU::solve is const and the
  // per-path states live in disjoint slots, keeping the parallel loop clean.
  ThetaStepper stepper(spec, trunc, dt, theta, nodes);
  const Eigen::VectorXd u0 = initial_vector(phi0, spec.dim, trunc);
  const Eigen::Index n = u0.size();

  std::vector<Eigen::VectorXd> finals(static_cast<std::size_t>(paths));
  std::vector<double> tails(static_cast<std::size_t>(paths), 0.0);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int p = 0; p < paths; ++p) {
    BrownianPath path(spec.dim, dt, steps, seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd u = u0;
    double tail = 0.0;
    for (int k = 0; k < steps; ++k) {
      u = stepper.step_stochastic(u, path.step_increments(k), &tail);
    }
    finals[static_cast<std::size_t>(p)] = std::move(u);
    tails[static_cast<std::size_t>(p)] = tail;
  }

  // Serial fixed-order reduction: mean and per-coefficient standard error.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < paths; ++p) mean += finals[static_cast<std::size_t>(p)];
  mean /= static_cast<double>(paths);

  EnsembleResult result;
  result.paths = paths;
  result.mean = to_expansion(mean, spec.dim, trunc);
  result.stderr_.assign(static_cast<std::size_t>(n), 0.0);
  if (paths > 1) {
    Eigen::VectorXd ssq = Eigen::VectorXd::Zero(n);
    for (int p = 0; p < paths; ++p) {
      Eigen::VectorXd d = finals[static_cast<std::size_t>(p)] - mean;
      ssq += d.cwiseProduct(d);
    }
    double pooled = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var = ssq[i] / static_cast<double>(paths - 1);
      const double se = std::sqrt(var / static_cast<double>(paths));
      result.stderr_[static_cast<std::size_t>(i)] = se;
      pooled += se * se;
    }
    result.pooled_se = std::sqrt(pooled);
  }
  double tail_sum = 0.0;
  for (double t : tails) tail_sum += t;
  result.tail_mean = tail_sum / static_cast<double>(paths);
  return result;
}

}  // namespace

EnsembleResult ensemble_mean(const OperatorSpec& spec, const HermiteExpansion& phi0,
                             int trunc, double t_final, double dt, int paths,
                             std::uint64_t seed, double theta, int nodes) {
  return ensemble_impl(spec, phi0, trunc, t_final, dt, paths, seed, theta, nodes, true);
}

EnsembleResult ensemble_mean_reference(const OperatorSpec& spec, const HermiteExpansion& phi0,
                                       int trunc, double t_final, double dt, int paths,
                                       std::uint64_t seed, double theta, int nodes) {
  return ensemble_impl(spec, phi0, trunc, t_final, dt, paths, seed, theta, nodes, false);
}

}  // namespace hflow
