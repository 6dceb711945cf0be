#include "hflow/sobolev.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "hflow/parallel.hpp"
#include "hflow/rng.hpp"

namespace hflow {

namespace {

void require_order(int p, const char* where) {
  if (p < 0) throw std::invalid_argument(std::string(where) + ": order p must be a nonnegative integer");
}

// Multi-index -> RNG address, independent of the surrounding truncation so
// that samples are nested.  Base 65 supports degrees up to 64 per axis.
std::uint64_t coeff_address(const MultiIndex& n) {
  std::uint64_t a = 0;
  for (int j = 0; j < n.dim(); ++j) {
    assert(n[j] <= 64);
    a = a * 65 + static_cast<std::uint64_t>(n[j]);
  }
  return a;
}

}  // namespace

double old_norm(const HermiteExpansion& phi, int p) {
  require_order(p, "old_norm");
  const int d = phi.dim();
  double acc = 0.0;
  for_each_box(d, phi.truncation(), [&](const MultiIndex& n) {
    const double c = phi.coeff(n);
    if (c == 0.0) return;
    acc += std::pow(2.0 * n.order() + d, 2 * p) * c * c;
  });
  return std::sqrt(acc);
}

double new_inner(const HermiteExpansion& phi, const HermiteExpansion& psi, int p) {
  require_order(p, "new_inner");
  assert(phi.dim() == psi.dim());
  const int d = phi.dim();
  const bool same = &phi == &psi;
  double acc = 0.0;
  // Fixed iteration order: alpha outer, beta inner, both row-major.
  for_each_order_leq(d, 2 * p, [&](const MultiIndex& alpha) {
    for_each_order_leq(d, 2 * p - alpha.order(), [&](const MultiIndex& beta) {
      const HermiteExpansion a = apply_monomial_derivative(alpha, beta, phi);
      if (same) {
        acc += inner0(a, a);
      } else {
        const HermiteExpansion b = apply_monomial_derivative(alpha, beta, psi);
        acc += inner0(a, b);
      }
    });
  });
  return acc;
}

double new_norm(const HermiteExpansion& phi, int p) { return std::sqrt(new_inner(phi, phi, p)); }

double hs_norm_sq(std::span<const HermiteExpansion> v, int p) {
  double acc = 0.0;
  for (const HermiteExpansion& vi : v) acc += new_inner(vi, vi, p);
  return acc;
}

HermiteExpansion ExpansionSampler::operator()(std::uint64_t sample_index) const {
  return at_truncation(sample_index, trunc);
}

HermiteExpansion ExpansionSampler::at_truncation(std::uint64_t sample_index, int trunc_n) const {
  if (trunc_n > 64)
    throw std::invalid_argument("ExpansionSampler: truncation beyond the nested address range");
  HermiteExpansion phi(dim, trunc_n);
  for_each_box(dim, trunc_n, [&](const MultiIndex& n) {
    double damp = 1.0;
    for (int j = 0; j < dim; ++j) damp *= std::pow(1.0 + n[j], -damping);
    phi.coeff(n) =
        damp * CounterRng::normal(seed, sampler_stream(sample_index), coeff_address(n));
  });
  return phi;
}

namespace {

EquivalenceReport sweep_impl(const ExpansionSampler& sampler, int p, int trials,
                             std::span<const int> truncations, bool parallel) {
  require_order(p, "equivalence_sweep");
  if (trials < 1) throw std::invalid_argument("equivalence_sweep: need at least one trial");
  for (int N : truncations) {
    // Validate before the parallel loop: a throw escaping it would terminate.
    if (N < 0 || N > 64) {
      throw std::invalid_argument("equivalence_sweep: truncation outside the sampler range");
    }
  }
  EquivalenceReport report;
  report.p = p;
  report.damping = sampler.damping;
  report.seed = sampler.seed;
  report.truncations.assign(truncations.begin(), truncations.end());
  report.ratios.resize(truncations.size());

  for (std::size_t ti = 0; ti < truncations.size(); ++ti) {
    const int N = truncations[ti];
    std::vector<double>& ratios = report.ratios[ti];
    ratios.assign(static_cast<std::size_t>(trials), 0.0);
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (int t = 0; t < trials; ++t) {
        const HermiteExpansion phi = sampler.at_truncation(t, N);
        ratios[static_cast<std::size_t>(t)] = new_norm(phi, p) / old_norm(phi, p);
      }
    } else {
      for (int t = 0; t < trials; ++t) {
        const HermiteExpansion phi = sampler.at_truncation(t, N);
        ratios[static_cast<std::size_t>(t)] = new_norm(phi, p) / old_norm(phi, p);
      }
    }
    double lo = ratios[0], hi = ratios[0];
    for (double r : ratios) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    report.ratio_min.push_back(lo);
    report.ratio_max.push_back(hi);
  }
  return report;
}

}  // namespace

EquivalenceReport equivalence_sweep(const ExpansionSampler& sampler, int p, int trials,
                                    std::span<const int> truncations) {
  return sweep_impl(sampler, p, trials, truncations, true);
}

EquivalenceReport equivalence_sweep_reference(const ExpansionSampler& sampler, int p, int trials,
                                              std::span<const int> truncations) {
  return sweep_impl(sampler, p, trials, truncations, false);
}

double max_drift(const EquivalenceReport& report) {
  double worst = 0.0;
  for (std::size_t i = 1; i < report.truncations.size(); ++i) {
    worst = std::max(worst, std::abs(report.ratio_min[i] - report.ratio_min[i - 1]) /
                                report.ratio_min[i - 1]);
    worst = std::max(worst, std::abs(report.ratio_max[i] - report.ratio_max[i - 1]) /
                                report.ratio_max[i - 1]);
  }
  return worst;
}

}  // namespace hflow
