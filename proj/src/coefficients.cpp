#include "hflow/coefficients.hpp"

#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace hflow {

const char* growth_name(GrowthClass g) {
  switch (g) {
    case GrowthClass::Bounded: return "bounded";
    case GrowthClass::Linear: return "linear";
    case GrowthClass::Unknown: return "unknown";
  }
  return "unknown";
}

double Expr::eval(std::span<const double> x) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Var:
      assert(axis < static_cast<int>(x.size()));
      return x[static_cast<std::size_t>(axis)];
    case Kind::Add: return a->eval(x) + b->eval(x);
    case Kind::Mul: return a->eval(x) * b->eval(x);
    case Kind::Neg: return -a->eval(x);
    case Kind::Sin: return std::sin(a->eval(x));
    case Kind::Cos: return std::cos(a->eval(x));
    case Kind::Tanh: return std::tanh(a->eval(x));
    case Kind::Exp: return std::exp(a->eval(x));
  }
  return 0.0;
}

std::string Expr::to_string() const {
  switch (kind) {
    case Kind::Constant: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", value);
      return buf;
    }
    case Kind::Var: return "x" + std::to_string(axis + 1);
    case Kind::Add: return "(add " + a->to_string() + " " + b->to_string() + ")";
    case Kind::Mul: return "(mul " + a->to_string() + " " + b->to_string() + ")";
    case Kind::Neg: return "(neg " + a->to_string() + ")";
    case Kind::Sin: return "(sin " + a->to_string() + ")";
    case Kind::Cos: return "(cos " + a->to_string() + ")";
    case Kind::Tanh: return "(tanh " + a->to_string() + ")";
    case Kind::Exp: return "(exp " + a->to_string() + ")";
  }
  return "0";
}

namespace {

ExprPtr node(Expr::Kind kind, double value, int axis, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->value = value;
  e->axis = axis;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

bool is_const(const ExprPtr& e, double v) {
  return e->kind == Expr::Kind::Constant && e->value == v;
}

}  // namespace

ExprPtr make_constant(double c) { return node(Expr::Kind::Constant, c, 0, nullptr, nullptr); }

ExprPtr make_var(int axis) {
  assert(axis >= 0 && axis < kMaxDim);
  return node(Expr::Kind::Var, 0.0, axis, nullptr, nullptr);
}

ExprPtr make_add(ExprPtr a, ExprPtr b) {
  if (a->kind == Expr::Kind::Constant && b->kind == Expr::Kind::Constant)
    return make_constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return node(Expr::Kind::Add, 0.0, 0, std::move(a), std::move(b));
}

ExprPtr make_mul(ExprPtr a, ExprPtr b) {
  if (a->kind == Expr::Kind::Constant && b->kind == Expr::Kind::Constant)
    return make_constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return node(Expr::Kind::Mul, 0.0, 0, std::move(a), std::move(b));
}

ExprPtr make_neg(ExprPtr a) {
  if (a->kind == Expr::Kind::Constant) return make_constant(-a->value);
  if (a->kind == Expr::Kind::Neg) return a->a;
  return node(Expr::Kind::Neg, 0.0, 0, std::move(a), nullptr);
}

ExprPtr make_sin(ExprPtr a) {
  if (a->kind == Expr::Kind::Constant) return make_constant(std::sin(a->value));
  return node(Expr::Kind::Sin, 0.0, 0, std::move(a), nullptr);
}

ExprPtr make_cos(ExprPtr a) {
  if (a->kind == Expr::Kind::Constant) return make_constant(std::cos(a->value));
  return node(Expr::Kind::Cos, 0.0, 0, std::move(a), nullptr);
}

ExprPtr make_tanh(ExprPtr a) {
  if (a->kind == Expr::Kind::Constant) return make_constant(std::tanh(a->value));
  return node(Expr::Kind::Tanh, 0.0, 0, std::move(a), nullptr);
}

ExprPtr make_exp(ExprPtr a) {
  if (a->kind == Expr::Kind::Constant) return make_constant(std::exp(a->value));
  return node(Expr::Kind::Exp, 0.0, 0, std::move(a), nullptr);
}

ExprPtr differentiate(const ExprPtr& e, int axis) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Constant: return make_constant(0.0);
    case K::Var: return make_constant(e->axis == axis ? 1.0 : 0.0);
    case K::Add: return make_add(differentiate(e->a, axis), differentiate(e->b, axis));
    case K::Mul:
      return make_add(make_mul(differentiate(e->a, axis), e->b),
                      make_mul(e->a, differentiate(e->b, axis)));
    case K::Neg: return make_neg(differentiate(e->a, axis));
    case K::Sin: return make_mul(make_cos(e->a), differentiate(e->a, axis));
    case K::Cos: return make_neg(make_mul(make_sin(e->a), differentiate(e->a, axis)));
    case K::Tanh: {
      // 1 - tanh^2
      ExprPtr t = make_tanh(e->a);
      ExprPtr sech2 = make_add(make_constant(1.0), make_neg(make_mul(t, t)));
      return make_mul(sech2, differentiate(e->a, axis));
    }
    case K::Exp: return make_mul(make_exp(e->a), differentiate(e->a, axis));
  }
  return make_constant(0.0);
}

GrowthClass classify_growth(const ExprPtr& e) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Constant: return GrowthClass::Bounded;
    case K::Var: return GrowthClass::Linear;
    case K::Neg: return classify_growth(e->a);
    case K::Sin:
    case K::Cos:
    case K::Tanh:
      return GrowthClass::Bounded;  // range-bounded whatever the argument does
    case K::Exp:
      return classify_growth(e->a) == GrowthClass::Bounded ? GrowthClass::Bounded
                                                           : GrowthClass::Unknown;
    case K::Add: {
      const GrowthClass ga = classify_growth(e->a), gb = classify_growth(e->b);
      if (ga == GrowthClass::Unknown || gb == GrowthClass::Unknown) return GrowthClass::Unknown;
      if (ga == GrowthClass::Linear || gb == GrowthClass::Linear) return GrowthClass::Linear;
      return GrowthClass::Bounded;
    }
    case K::Mul: {
      const GrowthClass ga = classify_growth(e->a), gb = classify_growth(e->b);
      if (ga == GrowthClass::Bounded && gb == GrowthClass::Bounded) return GrowthClass::Bounded;
      if (ga == GrowthClass::Bounded && gb == GrowthClass::Linear) return GrowthClass::Linear;
      if (ga == GrowthClass::Linear && gb == GrowthClass::Bounded) return GrowthClass::Linear;
      return GrowthClass::Unknown;
    }
  }
  return GrowthClass::Unknown;
}

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  int dim;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression parse error at offset " + std::to_string(pos) + ": " + what +
                     " in \"" + std::string(text) + "\"");
  }

  void skip_space() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool at_end() {
    skip_space();
    return pos >= text.size();
  }

  char peek() {
    skip_space();
    if (pos >= text.size()) fail("unexpected end of input");
    return text[pos];
  }

  std::string_view symbol() {
    skip_space();
    const std::size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])))) ++pos;
    if (pos == start) fail("expected a symbol");
    return text.substr(start, pos - start);
  }

  ExprPtr number() {
    skip_space();
    const char* begin = text.data() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos += static_cast<std::size_t>(end - begin);
    return make_constant(v);
  }

  ExprPtr variable(std::string_view sym) {
    if (sym.size() < 2 || sym[0] != 'x') fail("unknown symbol \"" + std::string(sym) + "\"");
    int axis = 0;
    for (char c : sym.substr(1)) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail("unknown symbol \"" + std::string(sym) + "\"");
      axis = axis * 10 + (c - '0');
    }
    if (axis < 1 || axis > dim)
      fail("coordinate \"" + std::string(sym) + "\" exceeds dimension " + std::to_string(dim));
    return make_var(axis - 1);
  }

  ExprPtr expr() {
    const char c = peek();
    if (c == '(') {
      ++pos;
      const std::string_view op = symbol();
      std::vector<ExprPtr> args;
      while (peek() != ')') args.push_back(expr());
      ++pos;  // consume ')'
      return apply(op, std::move(args));
    }
    if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c)))
      return number();
    return variable(symbol());
  }

  ExprPtr apply(std::string_view op, std::vector<ExprPtr> args) {
    auto unary = [&](const char* name) {
      if (args.size() != 1)
        fail(std::string(name) + " takes exactly one argument, got " +
             std::to_string(args.size()));
      return args[0];
    };
    if (op == "add" || op == "mul") {
      if (args.size() < 2)
        fail(std::string(op) + " takes at least two arguments, got " +
             std::to_string(args.size()));
      ExprPtr acc = args[0];
      for (std::size_t i = 1; i < args.size(); ++i)
        acc = (op == "add") ? make_add(acc, args[i]) : make_mul(acc, args[i]);
      return acc;
    }
    if (op == "neg") return make_neg(unary("neg"));
    if (op == "sin") return make_sin(unary("sin"));
    if (op == "cos") return make_cos(unary("cos"));
    if (op == "tanh") return make_tanh(unary("tanh"));
    if (op == "exp") return make_exp(unary("exp"));
    fail("unknown operator \"" + std::string(op) + "\"");
  }
};

}  // namespace

ExprPtr parse_expression(std::string_view text, int dim) {
  if (dim < 1 || dim > kMaxDim) throw ParseError("parse_expression: dimension out of range");
  Parser p{text, 0, dim};
  ExprPtr e = p.expr();
  if (!p.at_end()) p.fail("trailing input after expression");
  return e;
}

CoefficientFunction::CoefficientFunction() : dim_(0), expr_(make_constant(0.0)) {}

CoefficientFunction CoefficientFunction::constant(double c) {
  CoefficientFunction f;
  f.dim_ = 0;
  f.expr_ = make_constant(c);
  return f;
}

CoefficientFunction CoefficientFunction::parse(std::string_view text, int dim) {
  return from_expr(parse_expression(text, dim), dim);
}

CoefficientFunction CoefficientFunction::from_expr(ExprPtr e, int dim) {
  CoefficientFunction f;
  f.dim_ = dim;
  f.expr_ = std::move(e);
  return f;
}

double CoefficientFunction::constant_value() const {
  if (!is_constant())
    throw std::logic_error("CoefficientFunction: not structurally constant: " + text());
  return expr_->value;
}

CoefficientFunction CoefficientFunction::derivative(int axis) const {
  return from_expr(differentiate(expr_, axis), dim_);
}

CoefficientFunction CoefficientFunction::derivative(const MultiIndex& gamma) const {
  if (gamma.order() > kMaxDerivativeOrder)
    throw std::invalid_argument("CoefficientFunction: derivative order " +
                                std::to_string(gamma.order()) + " exceeds the supported maximum " +
                                std::to_string(kMaxDerivativeOrder));
  ExprPtr e = expr_;
  for (int j = 0; j < gamma.dim(); ++j)
    for (int r = 0; r < gamma[j]; ++r) e = differentiate(e, j);
  return from_expr(std::move(e), dim_);
}

CoefficientFunction operator+(const CoefficientFunction& a, const CoefficientFunction& b) {
  return CoefficientFunction::from_expr(make_add(a.expr_, b.expr_), std::max(a.dim_, b.dim_));
}

CoefficientFunction operator*(const CoefficientFunction& a, const CoefficientFunction& b) {
  return CoefficientFunction::from_expr(make_mul(a.expr_, b.expr_), std::max(a.dim_, b.dim_));
}

CoefficientFunction operator-(const CoefficientFunction& a) {
  return CoefficientFunction::from_expr(make_neg(a.expr_), a.dim_);
}

}  // namespace hflow
