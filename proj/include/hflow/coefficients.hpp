#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hflow/multi_index.hpp"

namespace hflow {

// Coarse growth classification used to validate operator coefficients:
// Bounded means sup|f| < inf, Linear means |f| <= C(1 + |x|).
enum class GrowthClass { Bounded, Linear, Unknown };

const char* growth_name(GrowthClass g);

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree over {constants, coordinates, add, mul, neg,
// sin, cos, tanh, exp}; closed under differentiation.
class Expr {
 public:
  enum class Kind { Constant, Var, Add, Mul, Neg, Sin, Cos, Tanh, Exp };

  Kind kind;
  double value = 0.0;  // Constant
  int axis = 0;        // Var (0-based)
  ExprPtr a, b;        // children

  double eval(std::span<const double> x) const;
  std::string to_string() const;  // prefix form, re-parseable
};

// Smart constructors with constant folding and identity elimination; all
// library code builds trees through these, so `Constant` nodes are reliable
// markers for structurally-constant functions.
ExprPtr make_constant(double c);
ExprPtr make_var(int axis);
ExprPtr make_add(ExprPtr a, ExprPtr b);
ExprPtr make_mul(ExprPtr a, ExprPtr b);
ExprPtr make_neg(ExprPtr a);
ExprPtr make_sin(ExprPtr a);
ExprPtr make_cos(ExprPtr a);
ExprPtr make_tanh(ExprPtr a);
ExprPtr make_exp(ExprPtr a);

ExprPtr differentiate(const ExprPtr& e, int axis);
GrowthClass classify_growth(const ExprPtr& e);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Prefix grammar:  expr := number | x1..x3 | (op expr...)
// with binary-or-more add/mul (left fold) and unary sin/cos/tanh/exp/neg.
// Coordinates beyond `dim` are rejected.
ExprPtr parse_expression(std::string_view text, int dim);

// A scalar coefficient field together with its declared dimension.  dim = 0
// marks a dimension-agnostic constant.  The maximum derivative order keeps
// symbolic trees from growing without bound in iterated-derivative formulas.
inline constexpr int kMaxDerivativeOrder = 6;

class CoefficientFunction {
 public:
  CoefficientFunction();  // the zero function, dimension-agnostic

  static CoefficientFunction constant(double c);
  static CoefficientFunction parse(std::string_view text, int dim);
  static CoefficientFunction from_expr(ExprPtr e, int dim);

  int dim() const { return dim_; }
  double operator()(std::span<const double> x) const { return expr_->eval(x); }
  double operator()(std::initializer_list<double> x) const {
    return (*this)(std::span<const double>(x.begin(), x.size()));
  }

  CoefficientFunction derivative(int axis) const;
  // d^gamma, |gamma| <= kMaxDerivativeOrder enforced.
  CoefficientFunction derivative(const MultiIndex& gamma) const;

  GrowthClass growth() const { return classify_growth(expr_); }
  bool is_constant() const { return expr_->kind == Expr::Kind::Constant; }
  double constant_value() const;
  bool is_zero() const { return is_constant() && expr_->value == 0.0; }

  const ExprPtr& expr() const { return expr_; }
  std::string text() const { return expr_->to_string(); }

  friend CoefficientFunction operator+(const CoefficientFunction& a,
                                       const CoefficientFunction& b);
  friend CoefficientFunction operator*(const CoefficientFunction& a,
                                       const CoefficientFunction& b);
  friend CoefficientFunction operator-(const CoefficientFunction& a);

 private:
  int dim_;
  ExprPtr expr_;
};

}  // namespace hflow
