#include "hflow/monotonicity.hpp"

#include <cmath>
#include <stdexcept>

#include "hflow/hermite.hpp"
#include "hflow/parallel.hpp"

namespace hflow {

double monotonicity_lhs(const OperatorSpec& spec, const HermiteExpansion& phi, int p,
                        int nodes) {
  const int out_trunc = phi.truncation() + 2;
  HermiteExpansion lphi = apply_L(spec, phi, out_trunc, nodes);
  std::vector<HermiteExpansion> aphi;
  aphi.reserve(spec.dim);
  for (int i = 0; i < spec.dim; ++i) {
    aphi.push_back(apply_A(spec, i, phi, out_trunc, nodes));
  }
  return 2.0 * new_inner(phi, lphi, p) + hs_norm_sq(aphi, p);
}

namespace {

MonotonicityReport estimate_impl(const OperatorSpec& spec, int p,
                                 const ExpansionSampler& sampler, int trials,
                                 std::span<const int> truncations, int nodes,
                                 double growth_factor, double growth_slack, bool parallel) {
  if (trials < 1) throw std::invalid_argument("estimate_constant: trials must be positive");
  if (truncations.empty()) {
    throw std::invalid_argument("estimate_constant: need at least one truncation");
  }
  for (std::size_t i = 1; i < truncations.size(); ++i) {
    if (truncations[i] <= truncations[i - 1]) {
      throw std::invalid_argument("estimate_constant: truncations must be increasing");
    }
  }
  if (truncations.front() < 0 || truncations.back() > 64) {
    // Validate before the parallel loop: a throw escaping it would terminate.
    throw std::invalid_argument("estimate_constant: truncation outside the sampler range");
  }

  MonotonicityReport report;
  report.p = p;
  report.seed = sampler.seed;
  report.truncations.assign(truncations.begin(), truncations.end());
  report.ratios.assign(truncations.size(), std::vector<double>(trials, 0.0));

  // Samples are independent work items; each owns a disjoint slice of every
  // ratio row, so the parallel fill is bitwise identical to the serial one.
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int s = 0; s < trials; ++s) {
    for (std::size_t t = 0; t < truncations.size(); ++t) {
      HermiteExpansion phi = sampler.at_truncation(s, truncations[t]);
      const double lhs = monotonicity_lhs(spec, phi, p, nodes);
      const double denom = new_inner(phi, phi, p);
      report.ratios[t][s] = lhs / denom;
    }
  }

  report.sup_ratio.assign(truncations.size(), 0.0);
  report.sup_abs_ratio.assign(truncations.size(), 0.0);
  for (std::size_t t = 0; t < truncations.size(); ++t) {
    double sup = report.ratios[t][0];
    double sup_abs = std::abs(report.ratios[t][0]);
    for (int s = 1; s < trials; ++s) {
      sup = std::max(sup, report.ratios[t][s]);
      sup_abs = std::max(sup_abs, std::abs(report.ratios[t][s]));
    }
    report.sup_ratio[t] = sup;
    report.sup_abs_ratio[t] = sup_abs;
  }

  report.bounded_growth = true;
  for (std::size_t t = 1; t < truncations.size(); ++t) {
    const double prev = report.sup_ratio[t - 1];
    const double allowed = prev + growth_factor * std::abs(prev) + growth_slack;
    if (report.sup_ratio[t] > allowed) report.bounded_growth = false;
  }
  return report;
}

}  // namespace

MonotonicityReport estimate_constant(const OperatorSpec& spec, int p,
                                     const ExpansionSampler& sampler, int trials,
                                     std::span<const int> truncations, int nodes,
                                     double growth_factor, double growth_slack) {
  return estimate_impl(spec, p, sampler, trials, truncations, nodes, growth_factor,
                       growth_slack, true);
}

MonotonicityReport estimate_constant_reference(const OperatorSpec& spec, int p,
                                               const ExpansionSampler& sampler, int trials,
                                               std::span<const int> truncations, int nodes,
                                               double growth_factor, double growth_slack) {
  return estimate_impl(spec, p, sampler, trials, truncations, nodes, growth_factor,
                       growth_slack, false);
}

namespace {

HermiteExpansion iterated_derivative(const HermiteExpansion& phi, const MultiIndex& order) {
  HermiteExpansion out = phi;
  for (int axis = 0; axis < phi.dim(); ++axis) {
    for (int rep = 0; rep < order[axis]; ++rep) out = apply_derivative(axis, out);
  }
  return out;
}

OrderReductionResult reduction_impl(const CoefficientFunction& f, const MultiIndex& beta,
                                    const MultiIndex& kappa, const HermiteExpansion& phi,
                                    int nodes) {
  const int dim = phi.dim();
  if (f.dim() != 0 && f.dim() != dim) {
    throw std::invalid_argument("order_reduction_check: field dimension mismatch");
  }
  if (kappa.order() == 0 || kappa.order() % 2 == 0) {
    throw std::invalid_argument("order_reduction_check: kappa must have odd positive order");
  }
  if (kappa.order() > kMaxDerivativeOrder) {
    throw std::invalid_argument("order_reduction_check: kappa order exceeds derivative cap");
  }

  const HermiteExpansion d_beta = iterated_derivative(phi, beta);
  const HermiteExpansion d_beta_kappa = iterated_derivative(d_beta, kappa);

  // Products of phi-derivatives with smooth non-polynomial fields (tanh and
  // friends) converge sub-geometrically in the Hermite basis, so the default
  // quadrature is enlarged well past the aliasing bound.
  const int max_trunc = phi.truncation() + beta.order() + kappa.order();
  const int m = nodes > 0 ? nodes : 2 * (max_trunc + 48);

  const HermiteExpansion f_dbeta =
      multiply_field(f, d_beta, d_beta_kappa.truncation(), m);
  OrderReductionResult result;
  result.lhs = inner0(f_dbeta, d_beta_kappa);

  result.rhs = 0.0;
  for_each_leq(kappa, [&](const MultiIndex& r) {
    if (r.order() == 0) return;
    const CoefficientFunction fr = f.derivative(r);
    MultiIndex rest = kappa.minus(r);
    const HermiteExpansion d_rest = iterated_derivative(d_beta, rest);
    const HermiteExpansion fr_drest = multiply_field(fr, d_rest, d_beta.truncation(), m);
    result.rhs += -0.5 * static_cast<double>(multi_binomial(kappa, r)) *
                  inner0(fr_drest, d_beta);
  });

  result.abs_error = std::abs(result.lhs - result.rhs);
  return result;
}

}  // namespace

OrderReductionResult order_reduction_check(const CoefficientFunction& f, int beta, int k,
                                           const HermiteExpansion& phi, int nodes) {
  if (phi.dim() != 1) {
    throw std::invalid_argument("order_reduction_check: 1-d overload needs a 1-d expansion");
  }
  if (beta < 0 || k < 1) {
    throw std::invalid_argument("order_reduction_check: need beta >= 0 and k >= 1");
  }
  MultiIndex beta_mi = MultiIndex::zeros(1);
  beta_mi[0] = beta;
  MultiIndex kappa = MultiIndex::zeros(1);
  kappa[0] = 2 * k - 1;
  return reduction_impl(f, beta_mi, kappa, phi, nodes);
}

OrderReductionResult order_reduction_check_multi(const CoefficientFunction& f,
                                                 const MultiIndex& beta, const MultiIndex& k,
                                                 int j, const HermiteExpansion& phi,
                                                 int nodes) {
  const int dim = phi.dim();
  if (beta.dim() != dim || k.dim() != dim) {
    throw std::invalid_argument("order_reduction_check: multi-index dimension mismatch");
  }
  if (j < 0 || j >= dim) throw std::invalid_argument("order_reduction_check: axis out of range");
  if (k[j] < 1) throw std::invalid_argument("order_reduction_check: k_j must be >= 1");
  const MultiIndex kappa = k.minus(MultiIndex::unit(dim, j));
  if (!kappa.nonnegative()) {
    throw std::invalid_argument("order_reduction_check: k - e_j must be nonnegative");
  }
  return reduction_impl(f, beta, kappa, phi, nodes);
}

}  // namespace hflow
