#include "hflow/hermite.hpp"

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "hflow/parallel.hpp"

namespace hflow {

namespace {

constexpr double kQuarterRootPi = 0.7511255444649425;  // pi^(-1/4)

// Shared three-term recurrence.  Seeded with h_0 = pi^(-1/4) e^(-x^2/2) it
// produces the normalized Hermite functions; seeded with p_0 = pi^(-1/4) it
// produces the orthonormal polynomials for the e^(-x^2) weight.
void recurrence(int max_degree, double x, double seed0, std::span<double> out) {
  assert(static_cast<int>(out.size()) >= max_degree + 1);
  out[0] = seed0;
  if (max_degree == 0) return;
  out[1] = x * std::sqrt(2.0) * out[0];
  for (int k = 1; k < max_degree; ++k) {
    out[k + 1] = x * std::sqrt(2.0 / (k + 1)) * out[k] -
                 std::sqrt(static_cast<double>(k) / (k + 1)) * out[k - 1];
  }
}

// out[r*K + k] = sum_i in[r*m + i] * M[i*K + k], fixed inner order so the
// result is bitwise independent of the thread count.
void contract_last(const double* in, std::size_t rows, int m, const double* M, int K,
                   double* out) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const double* row = in + static_cast<std::size_t>(r) * m;
    double* dst = out + static_cast<std::size_t>(r) * K;
    for (int k = 0; k < K; ++k) dst[k] = 0.0;
    for (int i = 0; i < m; ++i) {
      const double v = row[i];
      const double* Mi = M + static_cast<std::size_t>(i) * K;
      for (int k = 0; k < K; ++k) dst[k] += v * Mi[k];
    }
  }
}

void rotate_last_to_front(const double* in, std::size_t rest, int last, double* out) {
  for (std::size_t a = 0; a < rest; ++a)
    for (int i = 0; i < last; ++i)
      out[static_cast<std::size_t>(i) * rest + a] = in[a * last + i];
}

// Contract every axis of a d-cube (edge `m`) with the m x K matrix M.  After
// each contraction the freshly produced axis is rotated to the front, so d
// passes restore the original axis order with edge K.
std::vector<double> contract_all_axes(std::vector<double> values, int dim, int m,
                                      const std::vector<double>& M, int K) {
  std::vector<double> buf;
  for (int pass = 0; pass < dim; ++pass) {
    const std::size_t rest = values.size() / static_cast<std::size_t>(m);
    buf.resize(rest * static_cast<std::size_t>(K));
    contract_last(values.data(), rest, m, M.data(), K, buf.data());
    values.resize(buf.size());
    rotate_last_to_front(buf.data(), rest, K, values.data());
  }
  return values;
}

// h_k(x_i) for all nodes and degrees, row-major (node slowest).
std::vector<double> basis_on_nodes(const QuadratureRule& rule, int max_degree) {
  const int m = rule.size();
  std::vector<double> E(static_cast<std::size_t>(m) * (max_degree + 1));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < m; ++i) {
    const double x = rule.nodes[i];
    const double seed = kQuarterRootPi * std::exp(-0.5 * x * x);
    recurrence(max_degree, x, seed,
               std::span<double>(E.data() + static_cast<std::size_t>(i) * (max_degree + 1),
                                 static_cast<std::size_t>(max_degree + 1)));
  }
  return E;
}

}  // namespace

QuadratureRule gauss_hermite(int m) {
  if (m < 1) throw std::invalid_argument("gauss_hermite: node count must be positive");
  if (m > 300)
    throw std::invalid_argument(
        "gauss_hermite: node count beyond the range where edge weights stay "
        "representable in double precision");

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(m > 1 ? m - 1 : 0);
  for (int k = 1; k < m; ++k) sub[k - 1] = std::sqrt(0.5 * k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: tridiagonal eigensolve failed");

  QuadratureRule rule;
  rule.nodes.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m);
  rule.weights.resize(m);
  rule.total_weights.resize(m);

  // Christoffel sums.  1/sum_k p_k(x)^2 is the classical weight for the
  // e^(-x^2) measure; with the Gaussian-bearing functions h_k the same sum
  // yields the "total" weight W_i = w_i e^(x_i^2) without ever forming the
  // overflow-prone exponential factor.
  std::vector<double> vals(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double x = rule.nodes[i];

    recurrence(m - 1, x, kQuarterRootPi, vals);
    double poly_sum = 0.0;
    for (int k = 0; k < m; ++k) poly_sum += vals[k] * vals[k];
    rule.weights[i] = 1.0 / poly_sum;  // +0 if the sum overflowed to inf

    recurrence(m - 1, x, kQuarterRootPi * std::exp(-0.5 * x * x), vals);
    double func_sum = 0.0;
    for (int k = 0; k < m; ++k) func_sum += vals[k] * vals[k];
    // An edge node whose entire basis column underflows carries an integrand
    // contribution below 1e-280 for the decaying integrands this rule is
    // meant for; dropping it is far below double resolution.
    rule.total_weights[i] =
        (func_sum < 1e-280) ? 0.0 : 1.0 / func_sum;
  }
  return rule;
}

const QuadratureRule& cached_gauss_hermite(int m) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, gauss_hermite(m)).first;
  return it->second;
}

void hermite_values(int max_degree, double x, std::span<double> out) {
  recurrence(max_degree, x, kQuarterRootPi * std::exp(-0.5 * x * x), out);
}

double eval_hermite(const MultiIndex& n, std::span<const double> x) {
  assert(static_cast<int>(x.size()) == n.dim());
  double prod = 1.0;
  std::vector<double> vals;
  for (int j = 0; j < n.dim(); ++j) {
    vals.resize(static_cast<std::size_t>(n[j]) + 1);
    hermite_values(n[j], x[j], vals);
    prod *= vals[static_cast<std::size_t>(n[j])];
  }
  return prod;
}

HermiteExpansion::HermiteExpansion(int dim, int trunc)
    : dim_(dim), trunc_(trunc), coeffs_(box_size(dim, trunc), 0.0) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("HermiteExpansion: bad dimension");
  if (trunc < 0) throw std::invalid_argument("HermiteExpansion: negative truncation");
}

HermiteExpansion HermiteExpansion::basis(const MultiIndex& n, int trunc) {
  int needed = 0;
  for (int j = 0; j < n.dim(); ++j) needed = std::max(needed, n[j]);
  if (trunc < 0) trunc = needed;
  if (trunc < needed) throw std::invalid_argument("HermiteExpansion::basis: truncation too small");
  HermiteExpansion phi(n.dim(), trunc);
  phi.coeff(n) = 1.0;
  return phi;
}

double HermiteExpansion::operator()(std::span<const double> x) const {
  assert(static_cast<int>(x.size()) == dim_);
  // Per-axis value tables, then a flat accumulation in storage order.
  const int K = trunc_ + 1;
  std::vector<double> table(static_cast<std::size_t>(dim_) * K);
  for (int j = 0; j < dim_; ++j)
    hermite_values(trunc_, x[j],
                   std::span<double>(table.data() + static_cast<std::size_t>(j) * K,
                                     static_cast<std::size_t>(K)));
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    std::size_t rem = i;
    double prod = 1.0;
    for (int j = dim_ - 1; j >= 0; --j) {
      prod *= table[static_cast<std::size_t>(j) * K + rem % static_cast<std::size_t>(K)];
      rem /= static_cast<std::size_t>(K);
    }
    acc += coeffs_[i] * prod;
  }
  return acc;
}

double HermiteExpansion::value(double x) const {
  assert(dim_ == 1);
  return (*this)(std::span<const double>(&x, 1));
}

HermiteExpansion HermiteExpansion::resized(int trunc) const {
  HermiteExpansion out(dim_, trunc);
  const int keep = std::min(trunc_, trunc);
  for_each_box(dim_, keep, [&](const MultiIndex& n) { out.coeff(n) = coeff(n); });
  return out;
}

HermiteExpansion& HermiteExpansion::operator+=(const HermiteExpansion& o) {
  assert(dim_ == o.dim_);
  if (o.trunc_ > trunc_) *this = resized(o.trunc_);
  for_each_box(dim_, std::min(trunc_, o.trunc_),
               [&](const MultiIndex& n) { coeff(n) += o.coeff(n); });
  return *this;
}

HermiteExpansion& HermiteExpansion::operator-=(const HermiteExpansion& o) {
  assert(dim_ == o.dim_);
  if (o.trunc_ > trunc_) *this = resized(o.trunc_);
  for_each_box(dim_, std::min(trunc_, o.trunc_),
               [&](const MultiIndex& n) { coeff(n) -= o.coeff(n); });
  return *this;
}

HermiteExpansion& HermiteExpansion::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

double synthesize(const HermiteExpansion& phi, std::span<const double> x) { return phi(x); }

double inner0(const HermiteExpansion& a, const HermiteExpansion& b) {
  assert(a.dim() == b.dim());
  const int common = std::min(a.truncation(), b.truncation());
  double acc = 0.0;
  for_each_box(a.dim(), common, [&](const MultiIndex& n) { acc += a.coeff(n) * b.coeff(n); });
  return acc;
}

double norm0(const HermiteExpansion& a) { return std::sqrt(inner0(a, a)); }

HermiteExpansion analyze(const ScalarField& f, int dim, int trunc, const QuadratureRule& rule) {
  const int m = rule.size();
  const std::size_t total = box_size(dim, m - 1);
  std::vector<double> values(total);
  const auto n = static_cast<std::ptrdiff_t>(total);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::array<double, kMaxDim> x{};
    std::size_t rem = static_cast<std::size_t>(i);
    for (int j = dim - 1; j >= 0; --j) {
      x[static_cast<std::size_t>(j)] = rule.nodes[rem % static_cast<std::size_t>(m)];
      rem /= static_cast<std::size_t>(m);
    }
    values[static_cast<std::size_t>(i)] = f(std::span<const double>(x.data(), dim));
  }
  return grid_analyze(values, dim, trunc, rule);
}

HermiteExpansion grid_analyze(std::span<const double> values, int dim, int trunc,
                              const QuadratureRule& rule) {
  const int m = rule.size();
  if (m < trunc + 1)
    throw std::invalid_argument(
        "grid_analyze: aliasing guard requires at least truncation+1 quadrature nodes (got " +
        std::to_string(m) + " for truncation " + std::to_string(trunc) + ")");
  if (values.size() != box_size(dim, m - 1))
    throw std::invalid_argument("grid_analyze: value grid does not match rule size");

  const int K = trunc + 1;
  const std::vector<double> E = basis_on_nodes(rule, trunc);
  std::vector<double> WE(E.size());
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < K; ++k)
      WE[static_cast<std::size_t>(i) * K + k] =
          rule.total_weights[static_cast<std::size_t>(i)] *
          E[static_cast<std::size_t>(i) * K + k];

  std::vector<double> c =
      contract_all_axes(std::vector<double>(values.begin(), values.end()), dim, m, WE, K);
  HermiteExpansion out(dim, trunc);
  out.data() = std::move(c);
  return out;
}

std::vector<double> grid_values(const HermiteExpansion& phi, const QuadratureRule& rule) {
  const int m = rule.size();
  const int K = phi.truncation() + 1;
  const std::vector<double> E = basis_on_nodes(rule, phi.truncation());
  // Transpose to (degree, node) so the contraction machinery applies as-is.
  std::vector<double> Et(E.size());
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < K; ++k)
      Et[static_cast<std::size_t>(k) * m + i] = E[static_cast<std::size_t>(i) * K + k];
  return contract_all_axes(std::vector<double>(phi.coeffs().begin(), phi.coeffs().end()),
                           phi.dim(), K, Et, m);
}

namespace {

// Shared ladder kernel:
//   out[m] = sign_lower * sqrt(m_j/2) c[m - e_j] + sqrt((m_j+1)/2) c[m + e_j]
// sign_lower = +1 realizes multiplication by x_j, -1 the derivative d_j.
HermiteExpansion ladder(int axis, const HermiteExpansion& phi, double sign_lower) {
  assert(axis >= 0 && axis < phi.dim());
  const int n_in = phi.truncation();
  HermiteExpansion out(phi.dim(), n_in + 1);
  const auto in_box = [&](const MultiIndex& n) {
    for (int j = 0; j < phi.dim(); ++j)
      if (n[j] > n_in) return false;
    return true;
  };
  for_each_box(phi.dim(), n_in + 1, [&](const MultiIndex& m) {
    const int mj = m[axis];
    double acc = 0.0;
    if (mj >= 1) {
      const MultiIndex lower = m.shifted(axis, -1);
      if (in_box(lower)) acc += sign_lower * std::sqrt(0.5 * mj) * phi.coeff(lower);
    }
    const MultiIndex upper = m.shifted(axis, +1);
    if (in_box(upper)) acc += std::sqrt(0.5 * (mj + 1)) * phi.coeff(upper);
    out.coeff(m) = acc;
  });
  return out;
}

}  // namespace

HermiteExpansion apply_position(int axis, const HermiteExpansion& phi) {
  return ladder(axis, phi, +1.0);
}

HermiteExpansion apply_derivative(int axis, const HermiteExpansion& phi) {
  return ladder(axis, phi, -1.0);
}

HermiteExpansion apply_monomial_derivative(const MultiIndex& alpha, const MultiIndex& beta,
                                           const HermiteExpansion& phi) {
  assert(alpha.dim() == phi.dim() && beta.dim() == phi.dim());
  HermiteExpansion cur = phi;
  for (int j = 0; j < phi.dim(); ++j)
    for (int r = 0; r < beta[j]; ++r) cur = apply_derivative(j, cur);
  for (int j = 0; j < phi.dim(); ++j)
    for (int r = 0; r < alpha[j]; ++r) cur = apply_position(j, cur);
  return cur;
}

}  // namespace hflow
