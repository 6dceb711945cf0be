#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hflow/multi_index.hpp"

namespace hflow {

// Gauss-Hermite rule of size m.  `weights` integrate against e^{-x^2} dx;
// `total_weights` fold the Gaussian factor into the weight so that
//   integral f(x) dx  ~=  sum_i total_weights[i] * f(nodes[i])
// for integrands that already decay like the basis functions do.
struct QuadratureRule {
  std::vector<double> nodes;          // ascending
  std::vector<double> weights;        // w_i for the e^{-x^2} weight function
  std::vector<double> total_weights;  // W_i = w_i * e^{x_i^2}, via Christoffel sums
  int size() const { return static_cast<int>(nodes.size()); }
};

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix with off-diagonal sqrt(k/2).  Throws for m < 1 or m beyond the range
// where edge weights stay representable in double precision.
QuadratureRule gauss_hermite(int m);

// Memoized by m; the eigensolve is the only expensive part.
const QuadratureRule& cached_gauss_hermite(int m);

// Default node count used when a caller passes nodes = 0: comfortably above
// the m >= N+1 exactness threshold so products of fields with expansions are
// resolved, not just bare polynomials.
inline int default_quadrature_size(int trunc) { return 2 * (trunc + 8); }

// Fill out[0..N] with the normalized Hermite function values h_0(x)..h_N(x).
void hermite_values(int max_degree, double x, std::span<double> out);

// h_n(x) = prod_j h_{n_j}(x_j)
double eval_hermite(const MultiIndex& n, std::span<const double> x);

// Real scalar field on R^d (the abstract side of `analyze`).
using ScalarField = std::function<double(std::span<const double>)>;

// Coefficient vector of a truncated expansion sum_{n in {0..N}^d} c_n h_n,
// stored row-major over the tensor box (axis 0 slowest).
class HermiteExpansion {
 public:
  HermiteExpansion() : dim_(0), trunc_(-1) {}
  HermiteExpansion(int dim, int trunc);

  // Unit coefficient on h_n; trunc defaults to max(n_j).
  static HermiteExpansion basis(const MultiIndex& n, int trunc = -1);

  int dim() const { return dim_; }
  int truncation() const { return trunc_; }
  std::size_t size() const { return coeffs_.size(); }

  double coeff(const MultiIndex& n) const { return coeffs_[flat_index(n, trunc_)]; }
  double& coeff(const MultiIndex& n) { return coeffs_[flat_index(n, trunc_)]; }
  double flat(std::size_t i) const { return coeffs_[i]; }
  double& flat(std::size_t i) { return coeffs_[i]; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::vector<double>& data() { return coeffs_; }

  // Pointwise synthesis sum_n c_n h_n(x).
  double operator()(std::span<const double> x) const;
  double operator()(std::initializer_list<double> x) const {
    return (*this)(std::span<const double>(x.begin(), x.size()));
  }
  double value(double x) const;  // d = 1 convenience

  // Copy with the coefficient box enlarged (zero padding) or clipped.
  HermiteExpansion resized(int trunc) const;

  HermiteExpansion& operator+=(const HermiteExpansion& o);
  HermiteExpansion& operator-=(const HermiteExpansion& o);
  HermiteExpansion& operator*=(double s);

 private:
  int dim_;
  int trunc_;
  std::vector<double> coeffs_;
};

double synthesize(const HermiteExpansion& phi, std::span<const double> x);

// L^2 pairing of two expansions (orthonormality makes this a coefficient dot
// product over the common box).  Fixed summation order.
double inner0(const HermiteExpansion& a, const HermiteExpansion& b);
double norm0(const HermiteExpansion& a);

// Projection of a scalar field onto span{h_n : n in {0..N}^d} using the given
// rule on every axis.  Throws if rule.size() < trunc+1 (aliasing guard).
HermiteExpansion analyze(const ScalarField& f, int dim, int trunc, const QuadratureRule& rule);

// Values of phi on the tensor grid of `rule`, row-major, axis 0 slowest.
std::vector<double> grid_values(const HermiteExpansion& phi, const QuadratureRule& rule);

// Projection of raw grid values (same layout as grid_values) onto the box.
HermiteExpansion grid_analyze(std::span<const double> values, int dim, int trunc,
                              const QuadratureRule& rule);

// Ladder operations; both enlarge the truncation by exactly one along `axis`
// so no coefficient information is lost.
//   x_j h_n   = sqrt(n_j/2) h_{n-e_j} + sqrt((n_j+1)/2) h_{n+e_j}
//   d_j h_n   = sqrt(n_j/2) h_{n-e_j} - sqrt((n_j+1)/2) h_{n+e_j}
HermiteExpansion apply_position(int axis, const HermiteExpansion& phi);
HermiteExpansion apply_derivative(int axis, const HermiteExpansion& phi);

// x^alpha d^beta phi via repeated ladder application (derivatives first);
// output truncation N + |alpha| + |beta|, exact.
HermiteExpansion apply_monomial_derivative(const MultiIndex& alpha, const MultiIndex& beta,
                                           const HermiteExpansion& phi);

}  // namespace hflow
