#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "hflow/coefficients.hpp"
#include "hflow/hermite.hpp"
#include "hflow/sobolev.hpp"

namespace hflow {

// Coefficient data for the first-order/second-order operator pair
//   A_i phi = sum_j sigma_ji d_j phi + h_i phi                    (standard)
//   L  phi = 1/2 sum_ij (sigma sigma^t)_ij d_i d_j phi + sum_j f_j d_j phi + g phi
// or, in adjoint form, the divergence-style pair built from (sigma, b):
//   A*_i phi = -sum_j d_j(sigma_ji phi)
//   L*  phi = 1/2 sum_ij d_i d_j((sigma sigma^t)_ij phi) - sum_j d_j(b_j phi)
// sigma is stored row-major, sigma[i*dim + j] = sigma_ij; the noise index of
// A_i selects a column.
struct OperatorSpec {
  enum class Form { Standard, Adjoint };

  int dim = 1;
  Form form = Form::Standard;
  std::vector<CoefficientFunction> sigma;  // dim*dim
  std::vector<CoefficientFunction> f;      // dim (standard)
  std::vector<CoefficientFunction> h;      // dim (standard)
  CoefficientFunction g;                   // standard
  std::vector<CoefficientFunction> b;      // dim (adjoint)

  static OperatorSpec standard(int dim, std::vector<CoefficientFunction> sigma,
                               std::vector<CoefficientFunction> f,
                               std::vector<CoefficientFunction> h, CoefficientFunction g);
  static OperatorSpec adjoint(int dim, std::vector<CoefficientFunction> sigma,
                              std::vector<CoefficientFunction> b);

  const CoefficientFunction& sigma_at(int i, int j) const { return sigma[i * dim + j]; }

  // (sigma sigma^t)_ij as a symbolic expression.
  CoefficientFunction diffusion(int i, int j) const;

  // Structural diagnostics: coefficient sizes, dimensions, growth classes
  // (sigma, h, g bounded; f, b at most linear).  Empty when valid.
  std::vector<std::string> validate() const;
  void require_valid() const;  // throws std::invalid_argument with diagnostics
};

// Product-rule expansion of the adjoint pair into standard form:
//   sigma~ = -sigma,   h_i = -sum_j d_j sigma_ji,
//   f_j = sum_i d_i (sigma sigma^t)_ij - b_j,
//   g = 1/2 sum_ij d_i d_j (sigma sigma^t)_ij - sum_j d_j b_j.
OperatorSpec adjoint_to_standard(const OperatorSpec& spec);

// One coefficient field frozen on a quadrature grid, reusable across many
// multiplications.  Structurally constant fields bypass quadrature entirely.
class FieldMultiplier {
 public:
  FieldMultiplier(const CoefficientFunction& field, int dim, const QuadratureRule& rule);
  HermiteExpansion apply(const HermiteExpansion& psi, int out_trunc) const;

 private:
  int dim_;
  const QuadratureRule* rule_;
  bool constant_;
  double scale_ = 0.0;
  std::vector<double> values_;  // field on the tensor grid (non-constant case)
};

// P_T(field * psi) using `nodes` quadrature points per axis (0 picks
// 2*(max(N, T)+8)); exact for structurally constant fields.
HermiteExpansion multiply_field(const CoefficientFunction& field, const HermiteExpansion& psi,
                                int out_trunc, int nodes = 0);

// Apply A_i / L to an expansion, projected to out_trunc (default N+2).  Both
// operator forms are supported; adjoint-form applications multiply first at
// an enlarged intermediate truncation so the final projection is placement-
// exact (derivatives only couple modes two steps apart).
HermiteExpansion apply_A(const OperatorSpec& spec, int i, const HermiteExpansion& phi,
                         int out_trunc = -1, int nodes = 0);
HermiteExpansion apply_L(const OperatorSpec& spec, const HermiteExpansion& phi,
                         int out_trunc = -1, int nodes = 0);

// Dense rectangular realization mapping coefficients on {0..N}^d to
// {0..N'}^d with N' = N+2: the square block steps the resolved modes, the
// tail rows measure what the truncation discards.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(int dim, int in_trunc, int out_trunc);

  int dim() const { return dim_; }
  int in_truncation() const { return in_trunc_; }
  int out_truncation() const { return out_trunc_; }
  Eigen::Index rows() const { return mat_.rows(); }
  Eigen::Index cols() const { return mat_.cols(); }

  double& entry(Eigen::Index r, Eigen::Index c) { return mat_(r, c); }
  double entry(Eigen::Index r, Eigen::Index c) const { return mat_(r, c); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

  HermiteExpansion apply(const HermiteExpansion& phi) const;

  // Top square block (rows indexed by the input box).
  Eigen::MatrixXd square_block() const;
  // Rows whose multi-index leaves the input box.
  Eigen::MatrixXd tail_block() const;

 private:
  int dim_ = 0, in_trunc_ = -1, out_trunc_ = -1;
  Eigen::MatrixXd mat_;
};

struct AssembledOperators {
  OperatorMatrix L;
  std::vector<OperatorMatrix> A;
};

// Column-by-column assembly (column = operator applied to a basis vector);
// the parallel version distributes columns and is bitwise identical to the
// serial reference.
AssembledOperators assemble(const OperatorSpec& spec, int trunc, int nodes = 0);
AssembledOperators assemble_reference(const OperatorSpec& spec, int trunc, int nodes = 0);

struct AdjointCheckResult {
  double max_rel_error = 0.0;
  // One row per (operator, sample): "L" or "A1".., sample id, relative error.
  struct Row {
    std::string op;
    int sample;
    double rel_error;
  };
  std::vector<Row> rows;
};

// Compares direct adjoint-form application against the converted standard
// form on sampled expansions, for L* and every A*_i.
AdjointCheckResult adjoint_equivalence_check(const OperatorSpec& adjoint_spec,
                                             const ExpansionSampler& sampler, int trials,
                                             int nodes = 0);

}  // namespace hflow
