#include "hflow/operators.hpp"

#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "hflow/parallel.hpp"

namespace hflow {

OperatorSpec OperatorSpec::standard(int dim, std::vector<CoefficientFunction> sigma,
                                    std::vector<CoefficientFunction> f,
                                    std::vector<CoefficientFunction> h, CoefficientFunction g) {
  OperatorSpec spec;
  spec.dim = dim;
  spec.form = Form::Standard;
  spec.sigma = std::move(sigma);
  spec.f = std::move(f);
  spec.h = std::move(h);
  spec.g = std::move(g);
  spec.require_valid();
  return spec;
}

OperatorSpec OperatorSpec::adjoint(int dim, std::vector<CoefficientFunction> sigma,
                                   std::vector<CoefficientFunction> b) {
  OperatorSpec spec;
  spec.dim = dim;
  spec.form = Form::Adjoint;
  spec.sigma = std::move(sigma);
  spec.b = std::move(b);
  spec.require_valid();
  return spec;
}

CoefficientFunction OperatorSpec::diffusion(int i, int j) const {
  CoefficientFunction acc;
  for (int k = 0; k < dim; ++k) acc = acc + sigma_at(i, k) * sigma_at(j, k);
  return acc;
}

namespace {

void check_field(std::vector<std::string>& out, const CoefficientFunction& field, int dim,
                 GrowthClass strictest, const std::string& label) {
  if (field.dim() != 0 && field.dim() != dim)
    out.push_back(label + ": declared dimension " + std::to_string(field.dim()) +
                  " does not match operator dimension " + std::to_string(dim));
  const GrowthClass g = field.growth();
  const bool ok = (g == GrowthClass::Bounded) ||
                  (strictest == GrowthClass::Linear && g == GrowthClass::Linear);
  if (!ok)
    out.push_back(label + ": growth class " + growth_name(g) + " violates the required " +
                  growth_name(strictest) + " bound (" + field.text() + ")");
}

}  // namespace

std::vector<std::string> OperatorSpec::validate() const {
  std::vector<std::string> out;
  if (dim < 1 || dim > kMaxDim) {
    out.push_back("operator dimension must be between 1 and " + std::to_string(kMaxDim));
    return out;
  }
  if (static_cast<int>(sigma.size()) != dim * dim)
    out.push_back("sigma must carry dim*dim entries, got " + std::to_string(sigma.size()));
  else
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        check_field(out, sigma_at(i, j), dim, GrowthClass::Bounded,
                    "sigma[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]");

  if (form == Form::Standard) {
    if (static_cast<int>(f.size()) != dim)
      out.push_back("f must carry dim entries, got " + std::to_string(f.size()));
    else
      for (int j = 0; j < dim; ++j)
        check_field(out, f[j], dim, GrowthClass::Linear, "f[" + std::to_string(j + 1) + "]");
    if (static_cast<int>(h.size()) != dim)
      out.push_back("h must carry dim entries, got " + std::to_string(h.size()));
    else
      for (int i = 0; i < dim; ++i)
        check_field(out, h[i], dim, GrowthClass::Bounded, "h[" + std::to_string(i + 1) + "]");
    check_field(out, g, dim, GrowthClass::Bounded, "g");
    if (!b.empty()) out.push_back("standard form does not take a drift b");
  } else {
    if (static_cast<int>(b.size()) != dim)
      out.push_back("b must carry dim entries, got " + std::to_string(b.size()));
    else
      for (int j = 0; j < dim; ++j)
        check_field(out, b[j], dim, GrowthClass::Linear, "b[" + std::to_string(j + 1) + "]");
    if (!f.empty() || !h.empty())
      out.push_back("adjoint form does not take f or h coefficients");
  }
  return out;
}

void OperatorSpec::require_valid() const {
  const std::vector<std::string> problems = validate();
  if (problems.empty()) return;
  std::string msg = "invalid operator specification:";
  for (const std::string& p : problems) msg += "\n  - " + p;
  throw std::invalid_argument(msg);
}

OperatorSpec adjoint_to_standard(const OperatorSpec& spec) {
  if (spec.form != OperatorSpec::Form::Adjoint)
    throw std::invalid_argument("adjoint_to_standard: spec is already in standard form");
  const int d = spec.dim;

  std::vector<CoefficientFunction> sigma_new(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) sigma_new[i * d + j] = -spec.sigma_at(i, j);

  std::vector<CoefficientFunction> h(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    CoefficientFunction acc;
    for (int j = 0; j < d; ++j) acc = acc + spec.sigma_at(j, i).derivative(j);
    h[i] = -acc;
  }

  std::vector<CoefficientFunction> f(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    CoefficientFunction acc;
    for (int i = 0; i < d; ++i) acc = acc + spec.diffusion(i, j).derivative(i);
    f[j] = acc + (-spec.b[j]);
  }

  CoefficientFunction g;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      MultiIndex gamma = MultiIndex::zeros(d);
      gamma[i] += 1;
      gamma[j] += 1;
      g = g + CoefficientFunction::constant(0.5) * spec.diffusion(i, j).derivative(gamma);
    }
  for (int j = 0; j < d; ++j) g = g + (-spec.b[j].derivative(j));

  return OperatorSpec::standard(d, std::move(sigma_new), std::move(f), std::move(h),
                                std::move(g));
}

FieldMultiplier::FieldMultiplier(const CoefficientFunction& field, int dim,
                                 const QuadratureRule& rule)
    : dim_(dim), rule_(&rule), constant_(field.is_constant()) {
  if (constant_) {
    scale_ = field.is_zero() ? 0.0 : field.constant_value();
    return;
  }
  const int m = rule.size();
  const std::size_t total = box_size(dim, m - 1);
  values_.resize(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::array<double, kMaxDim> x{};
    std::size_t rem = idx;
    for (int j = dim - 1; j >= 0; --j) {
      x[static_cast<std::size_t>(j)] = rule.nodes[rem % static_cast<std::size_t>(m)];
      rem /= static_cast<std::size_t>(m);
    }
    values_[idx] = field(std::span<const double>(x.data(), dim));
  }
}

HermiteExpansion FieldMultiplier::apply(const HermiteExpansion& psi, int out_trunc) const {
  assert(psi.dim() == dim_);
  if (constant_) {
    HermiteExpansion out = psi.resized(out_trunc);
    out *= scale_;
    return out;
  }
  std::vector<double> grid = grid_values(psi, *rule_);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] *= values_[i];
  return grid_analyze(grid, dim_, out_trunc, *rule_);
}

HermiteExpansion multiply_field(const CoefficientFunction& field, const HermiteExpansion& psi,
                                int out_trunc, int nodes) {
  const int m = nodes > 0 ? nodes : default_quadrature_size(std::max(psi.truncation(), out_trunc));
  const QuadratureRule& rule = cached_gauss_hermite(m);
  return FieldMultiplier(field, psi.dim(), rule).apply(psi, out_trunc);
}

namespace {

// Shared application engine so spec-level helpers and matrix assembly reuse
// identical arithmetic.  Multipliers for every coefficient of the spec are
// frozen once on one rule.
struct SpecEngine {
  const OperatorSpec& spec;
  const QuadratureRule& rule;
  std::vector<FieldMultiplier> sigma;   // dim*dim
  std::vector<FieldMultiplier> first;   // f (standard) or b (adjoint), dim
  std::vector<FieldMultiplier> zero;    // h (standard), dim; empty for adjoint
  std::vector<FieldMultiplier> diff;    // (sigma sigma^t)_ij, dim*dim
  std::unique_ptr<FieldMultiplier> g;   // standard only

  SpecEngine(const OperatorSpec& s, int max_in_trunc, int out_trunc, int nodes)
      : spec(s),
        rule(cached_gauss_hermite(
            nodes > 0 ? nodes
                      : default_quadrature_size(std::max(max_in_trunc, out_trunc) + 2))) {
    const int d = s.dim;
    sigma.reserve(static_cast<std::size_t>(d) * d);
    diff.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        sigma.emplace_back(s.sigma_at(i, j), d, rule);
        diff.emplace_back(s.diffusion(i, j), d, rule);
      }
    if (s.form == OperatorSpec::Form::Standard) {
      for (int j = 0; j < d; ++j) first.emplace_back(s.f[j], d, rule);
      for (int i = 0; i < d; ++i) zero.emplace_back(s.h[i], d, rule);
      g = std::make_unique<FieldMultiplier>(s.g, d, rule);
    } else {
      for (int j = 0; j < d; ++j) first.emplace_back(s.b[j], d, rule);
    }
  }

  HermiteExpansion apply_A(int i, const HermiteExpansion& phi, int out_trunc) const {
    const int d = spec.dim;
    HermiteExpansion acc(d, out_trunc);
    if (spec.form == OperatorSpec::Form::Standard) {
      for (int j = 0; j < d; ++j) {
        if (spec.sigma_at(j, i).is_zero()) continue;
        acc += sigma[j * d + i].apply(apply_derivative(j, phi), out_trunc);
      }
      acc += zero[i].apply(phi, out_trunc);
    } else {
      // A*_i phi = -sum_j d_j(sigma_ji phi); multiplying at out_trunc+1 makes
      // the final projection placement-exact.
      for (int j = 0; j < d; ++j) {
        if (spec.sigma_at(j, i).is_zero()) continue;
        HermiteExpansion prod = sigma[j * d + i].apply(phi, out_trunc + 1);
        acc -= apply_derivative(j, prod).resized(out_trunc);
      }
    }
    return acc;
  }

  HermiteExpansion apply_L(const HermiteExpansion& phi, int out_trunc) const {
    const int d = spec.dim;
    HermiteExpansion acc(d, out_trunc);
    if (spec.form == OperatorSpec::Form::Standard) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (spec.diffusion(i, j).is_zero()) continue;
          HermiteExpansion dij = apply_derivative(i, apply_derivative(j, phi));
          HermiteExpansion term = diff[i * d + j].apply(dij, out_trunc);
          term *= 0.5;
          acc += term;
        }
      for (int j = 0; j < d; ++j) {
        if (spec.f[j].is_zero()) continue;
        acc += first[j].apply(apply_derivative(j, phi), out_trunc);
      }
      acc += g->apply(phi, out_trunc);
    } else {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (spec.diffusion(i, j).is_zero()) continue;
          HermiteExpansion prod = diff[i * d + j].apply(phi, out_trunc + 2);
          HermiteExpansion term =
              apply_derivative(i, apply_derivative(j, prod)).resized(out_trunc);
          term *= 0.5;
          acc += term;
        }
      for (int j = 0; j < d; ++j) {
        if (spec.b[j].is_zero()) continue;
        HermiteExpansion prod = first[j].apply(phi, out_trunc + 1);
        acc -= apply_derivative(j, prod).resized(out_trunc);
      }
    }
    return acc;
  }
};

int resolve_out_trunc(int out_trunc, const HermiteExpansion& phi) {
  return out_trunc >= 0 ? out_trunc : phi.truncation() + 2;
}

}  // namespace

HermiteExpansion apply_A(const OperatorSpec& spec, int i, const HermiteExpansion& phi,
                         int out_trunc, int nodes) {
  spec.require_valid();
  if (i < 0 || i >= spec.dim) throw std::invalid_argument("apply_A: noise index out of range");
  const int T = resolve_out_trunc(out_trunc, phi);
  SpecEngine engine(spec, phi.truncation(), T, nodes);
  return engine.apply_A(i, phi, T);
}

HermiteExpansion apply_L(const OperatorSpec& spec, const HermiteExpansion& phi, int out_trunc,
                         int nodes) {
  spec.require_valid();
  const int T = resolve_out_trunc(out_trunc, phi);
  SpecEngine engine(spec, phi.truncation(), T, nodes);
  return engine.apply_L(phi, T);
}

OperatorMatrix::OperatorMatrix(int dim, int in_trunc, int out_trunc)
    : dim_(dim),
      in_trunc_(in_trunc),
      out_trunc_(out_trunc),
      mat_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(box_size(dim, out_trunc)),
                                 static_cast<Eigen::Index>(box_size(dim, in_trunc)))) {}

HermiteExpansion OperatorMatrix::apply(const HermiteExpansion& phi) const {
  assert(phi.dim() == dim_);
  const HermiteExpansion in = phi.truncation() == in_trunc_ ? phi : phi.resized(in_trunc_);
  HermiteExpansion out(dim_, out_trunc_);
  for (Eigen::Index r = 0; r < mat_.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < mat_.cols(); ++c)
      acc += mat_(r, c) * in.flat(static_cast<std::size_t>(c));
    out.flat(static_cast<std::size_t>(r)) = acc;
  }
  return out;
}

Eigen::MatrixXd OperatorMatrix::square_block() const {
  // Rows of the output box whose multi-index stays inside the input box.
  const std::size_t in_size = box_size(dim_, in_trunc_);
  Eigen::MatrixXd sq(static_cast<Eigen::Index>(in_size), mat_.cols());
  std::size_t row = 0;
  for_each_box(dim_, in_trunc_, [&](const MultiIndex& n) {
    sq.row(static_cast<Eigen::Index>(row++)) =
        mat_.row(static_cast<Eigen::Index>(flat_index(n, out_trunc_)));
  });
  return sq;
}

Eigen::MatrixXd OperatorMatrix::tail_block() const {
  const std::size_t in_size = box_size(dim_, in_trunc_);
  Eigen::MatrixXd tail(mat_.rows() - static_cast<Eigen::Index>(in_size), mat_.cols());
  Eigen::Index row = 0;
  for_each_box(dim_, out_trunc_, [&](const MultiIndex& n) {
    bool inside = true;
    for (int j = 0; j < dim_; ++j) inside = inside && n[j] <= in_trunc_;
    if (!inside) tail.row(row++) = mat_.row(static_cast<Eigen::Index>(flat_index(n, out_trunc_)));
  });
  assert(row == tail.rows());
  return tail;
}

namespace {

AssembledOperators assemble_impl(const OperatorSpec& spec, int trunc, int nodes, bool parallel) {
  spec.require_valid();
  if (trunc < 0) throw std::invalid_argument("assemble: negative truncation");
  const int d = spec.dim;
  const int out_trunc = trunc + 2;
  const SpecEngine engine(spec, trunc, out_trunc, nodes);

  AssembledOperators ops;
  ops.L = OperatorMatrix(d, trunc, out_trunc);
  ops.A.assign(static_cast<std::size_t>(d), OperatorMatrix(d, trunc, out_trunc));

  const auto cols = static_cast<std::ptrdiff_t>(box_size(d, trunc));
  const auto fill_column = [&](std::ptrdiff_t c) {
    const MultiIndex n = unflatten(static_cast<std::size_t>(c), d, trunc);
    const HermiteExpansion basis = HermiteExpansion::basis(n, trunc);
    const HermiteExpansion Lb = engine.apply_L(basis, out_trunc);
    for (Eigen::Index r = 0; r < ops.L.rows(); ++r)
      ops.L.entry(r, static_cast<Eigen::Index>(c)) = Lb.flat(static_cast<std::size_t>(r));
    for (int i = 0; i < d; ++i) {
      const HermiteExpansion Ab = engine.apply_A(i, basis, out_trunc);
      for (Eigen::Index r = 0; r < ops.A[i].rows(); ++r)
        ops.A[i].entry(r, static_cast<Eigen::Index>(c)) = Ab.flat(static_cast<std::size_t>(r));
    }
  };

  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t c = 0; c < cols; ++c) fill_column(c);
  } else {
    for (std::ptrdiff_t c = 0; c < cols; ++c) fill_column(c);
  }
  return ops;
}

}  // namespace

AssembledOperators assemble(const OperatorSpec& spec, int trunc, int nodes) {
  return assemble_impl(spec, trunc, nodes, true);
}

AssembledOperators assemble_reference(const OperatorSpec& spec, int trunc, int nodes) {
  return assemble_impl(spec, trunc, nodes, false);
}

AdjointCheckResult adjoint_equivalence_check(const OperatorSpec& adjoint_spec,
                                             const ExpansionSampler& sampler, int trials,
                                             int nodes) {
  if (adjoint_spec.form != OperatorSpec::Form::Adjoint)
    throw std::invalid_argument("adjoint_equivalence_check: spec must be in adjoint form");
  const OperatorSpec converted = adjoint_to_standard(adjoint_spec);
  const int d = adjoint_spec.dim;

  AdjointCheckResult result;
  for (int t = 0; t < trials; ++t) {
    const HermiteExpansion phi = sampler(static_cast<std::uint64_t>(t));
    const int T = phi.truncation() + 2;

    const auto record = [&](const std::string& op, const HermiteExpansion& direct,
                            const HermiteExpansion& via) {
      HermiteExpansion diffv = direct;
      diffv -= via;
      const double denom = std::max(norm0(direct), 1e-300);
      const double rel = norm0(diffv) / denom;
      result.rows.push_back({op, t, rel});
      result.max_rel_error = std::max(result.max_rel_error, rel);
    };

    record("L", apply_L(adjoint_spec, phi, T, nodes), apply_L(converted, phi, T, nodes));
    for (int i = 0; i < d; ++i)
      record("A" + std::to_string(i + 1), apply_A(adjoint_spec, i, phi, T, nodes),
             apply_A(converted, i, phi, T, nodes));
  }
  return result;
}

}  // namespace hflow
