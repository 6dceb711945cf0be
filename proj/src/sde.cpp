#include "hflow/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "hflow/parallel.hpp"

namespace hflow {

namespace {

void require_adjoint(const OperatorSpec& spec, const char* what) {
  if (spec.form != OperatorSpec::Form::Adjoint) {
    throw std::invalid_argument(std::string(what) +
                                ": the flow is defined by an adjoint-form spec");
  }
  spec.require_valid();
}

int resolve_pairing_nodes(const HermiteExpansion& phi, const HermiteExpansion& psi,
                          int nodes) {
  if (nodes > 0) return nodes;
  // Enough for an exact t = 0 pairing plus headroom for the flow spreading
  // the integrand; the floor keeps low-order states honest too.
  const int top = std::max(phi.truncation(), psi.truncation());
  return std::max(48, default_quadrature_size(top));
}

int step_count(double t, double dt, const char* what) {
  if (dt <= 0.0) throw std::invalid_argument(std::string(what) + ": dt must be positive");
  if (t < 0.0) throw std::invalid_argument(std::string(what) + ": time must be nonnegative");
  const double raw = t / dt;
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) > 1e-9 * std::max(1.0, std::abs(raw))) {
    throw std::invalid_argument(std::string(what) + ": t must be a whole number of dt steps");
  }
  return static_cast<int>(rounded);
}

}  // namespace

void euler_maruyama(const OperatorSpec& spec, std::span<double> points,
                    const BrownianPath& path) {
  require_adjoint(spec, "euler_maruyama");
  const int dim = spec.dim;
  if (path.dim() != dim) {
    throw std::invalid_argument("euler_maruyama: path dimension must match the spec");
  }
  if (points.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("euler_maruyama: point buffer is not a multiple of dim");
  }
  const std::size_t count = points.size() / static_cast<std::size_t>(dim);
  const double dt = path.dt();

  // Freeze the field access pattern once: constant entries skip evaluation.
  struct Entry {
    bool constant;
    double value;
    const CoefficientFunction* fn;
  };
  std::vector<Entry> sig(static_cast<std::size_t>(dim) * dim);
  std::vector<Entry> drift(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) {
      const CoefficientFunction& fn = spec.sigma[static_cast<std::size_t>(j) * dim + i];
      sig[static_cast<std::size_t>(j) * dim + i] = {fn.is_constant(),
                                                    fn.is_constant() ? fn.constant_value() : 0.0,
                                                    &fn};
    }
    const CoefficientFunction& fn = spec.b[static_cast<std::size_t>(j)];
    drift[static_cast<std::size_t>(j)] = {fn.is_constant(),
                                          fn.is_constant() ? fn.constant_value() : 0.0, &fn};
  }

  std::array<double, kMaxDim> x{}, dx{};
  for (int k = 0; k < path.steps(); ++k) {
    const std::span<const double> db = path.step_increments(k);
    for (std::size_t pt = 0; pt < count; ++pt) {
      double* p = points.data() + pt * static_cast<std::size_t>(dim);
      for (int j = 0; j < dim; ++j) x[static_cast<std::size_t>(j)] = p[j];
      const std::span<const double> xs(x.data(), static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) {
        const Entry& bj = drift[static_cast<std::size_t>(j)];
        double move = (bj.constant ? bj.value : (*bj.fn)(xs)) * dt;
        for (int i = 0; i < dim; ++i) {
          const Entry& s = sig[static_cast<std::size_t>(j) * dim + i];
          move += (s.constant ? s.value : (*s.fn)(xs)) * db[i];
        }
        dx[static_cast<std::size_t>(j)] = move;
      }
      for (int j = 0; j < dim; ++j) p[j] += dx[static_cast<std::size_t>(j)];
    }
  }
}

double flow_pairing(const OperatorSpec& spec, const HermiteExpansion& phi,
                    const HermiteExpansion& psi, const BrownianPath& path, int nodes) {
  require_adjoint(spec, "flow_pairing");
  const int dim = spec.dim;
  if (phi.dim() != dim || psi.dim() != dim) {
    throw std::invalid_argument("flow_pairing: state dimensions must match the spec");
  }
  if (path.dim() != dim) {
    throw std::invalid_argument("flow_pairing: path dimension must match the spec");
  }

  const int m = resolve_pairing_nodes(phi, psi, nodes);
  const QuadratureRule& rule = cached_gauss_hermite(m);

  // Tensor grid of start points with product total weights.
  const std::size_t count = box_size(dim, m - 1);
  std::vector<double> points(count * static_cast<std::size_t>(dim));
  std::vector<double> weighted_phi(count);
  std::array<double, kMaxDim> x{};
  for (std::size_t i = 0; i < count; ++i) {
    MultiIndex id = unflatten(i, dim, m - 1);
    double w = 1.0;
    for (int j = 0; j < dim; ++j) {
      x[static_cast<std::size_t>(j)] = rule.nodes[static_cast<std::size_t>(id[j])];
      w *= rule.total_weights[static_cast<std::size_t>(id[j])];
      points[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] =
          x[static_cast<std::size_t>(j)];
    }
    weighted_phi[i] =
        w * phi(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
  }

  euler_maruyama(spec, points, path);

  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (weighted_phi[i] == 0.0) continue;
    const std::span<const double> end(points.data() + i * static_cast<std::size_t>(dim),
                                      static_cast<std::size_t>(dim));
    acc += weighted_phi[i] * psi(end);
  }
  return acc;
}

double flow_pairing(const OperatorSpec& spec, const HermiteExpansion& phi,
                    const HermiteExpansion& psi, double t, double dt, std::uint64_t seed,
                    std::uint64_t path_index, int nodes) {
  const int steps = step_count(t, dt, "flow_pairing");
  BrownianPath path(spec.dim, dt, steps, seed, path_index);
  return flow_pairing(spec, phi, psi, path, nodes);
}

namespace {

PairingResult mc_impl(const OperatorSpec& spec, const HermiteExpansion& phi,
                      const HermiteExpansion& psi, double t, double dt, int paths,
                      std::uint64_t seed, int nodes, bool parallel) {
  require_adjoint(spec, "mc_pairing");
  if (paths < 1) throw std::invalid_argument("mc_pairing: need at least one path");
  if (phi.dim() != spec.dim || psi.dim() != spec.dim) {
    // Validate here: a throw escaping the parallel loop would terminate.
    throw std::invalid_argument("mc_pairing: state dimensions must match the spec");
  }
  const int steps = step_count(t, dt, "mc_pairing");
  // Resolve and warm the quadrature rule up front so an oversized node count
  // throws here instead of inside the parallel loop.
  cached_gauss_hermite(resolve_pairing_nodes(phi, psi, nodes));

  PairingResult result;
  result.paths = paths;
  result.t = t;
  result.seed = seed;
  result.samples.assign(static_cast<std::size_t>(paths), 0.0);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int p = 0; p < paths; ++p) {
    BrownianPath path(spec.dim, dt, steps, seed, static_cast<std::uint64_t>(p));
    result.samples[static_cast<std::size_t>(p)] = flow_pairing(spec, phi, psi, path, nodes);
  }

  double sum = 0.0;
  for (double s : result.samples) sum += s;
  result.estimate = sum / static_cast<double>(paths);
  if (paths > 1) {
    double ssq = 0.0;
    for (double s : result.samples) {
      const double d = s - result.estimate;
      ssq += d * d;
    }
    result.stderr_ =
        std::sqrt(ssq / static_cast<double>(paths - 1) / static_cast<double>(paths));
  }
  return result;
}

}  // namespace

PairingResult mc_pairing(const OperatorSpec& spec, const HermiteExpansion& phi,
                         const HermiteExpansion& psi, double t, double dt, int paths,
                         std::uint64_t seed, int nodes) {
  return mc_impl(spec, phi, psi, t, dt, paths, seed, nodes, true);
}

PairingResult mc_pairing_reference(const OperatorSpec& spec, const HermiteExpansion& phi,
                                   const HermiteExpansion& psi, double t, double dt,
                                   int paths, std::uint64_t seed, int nodes) {
  return mc_impl(spec, phi, psi, t, dt, paths, seed, nodes, false);
}

}  // namespace hflow
