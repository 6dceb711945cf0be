#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hflow/coefficients.hpp"

using namespace hflow;

TEST_CASE("parse and evaluate the grammar") {
  auto f = CoefficientFunction::parse("(add 1 (mul 0.5 (sin x1)))", 1);
  for (double x : {-2.0, 0.0, 1.3}) {
    CHECK(f({x}) == doctest::Approx(1.0 + 0.5 * std::sin(x)).epsilon(1e-15));
  }

  auto g = CoefficientFunction::parse("(cos (add x1 x2))", 2);
  CHECK(g({0.3, 0.4}) == doctest::Approx(std::cos(0.7)).epsilon(1e-15));

  auto h = CoefficientFunction::parse("(tanh x1)", 1);
  CHECK(h({-1.0}) == doctest::Approx(std::tanh(-1.0)).epsilon(1e-15));

  auto e = CoefficientFunction::parse("(exp (neg (mul x1 x1)))", 1);
  CHECK(e({2.0}) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));

  // N-ary add/mul folds left.
  auto n = CoefficientFunction::parse("(add 1 2 x1 (mul 2 3 x1))", 1);
  CHECK(n({5.0}) == doctest::Approx(3.0 + 5.0 + 30.0).epsilon(1e-15));

  // Scientific notation and signs.
  auto s = CoefficientFunction::parse("(mul -2.5e-1 x1)", 1);
  CHECK(s({4.0}) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("parse errors carry diagnostics") {
  CHECK_THROWS_AS((void)CoefficientFunction::parse("(bogus x1)", 1), ParseError);
  CHECK_THROWS_AS((void)CoefficientFunction::parse("(sin x1 x1)", 1), ParseError);
  CHECK_THROWS_AS((void)CoefficientFunction::parse("(add 1)", 1), ParseError);
  CHECK_THROWS_AS((void)CoefficientFunction::parse("(sin x2)", 1), ParseError);  // dim
  CHECK_THROWS_AS((void)CoefficientFunction::parse("(sin x1", 1), ParseError);   // unclosed
  CHECK_THROWS_AS((void)CoefficientFunction::parse("1 2", 1), ParseError);       // trailing
  CHECK_THROWS_AS((void)CoefficientFunction::parse("y1", 1), ParseError);

  try {
    (void)CoefficientFunction::parse("(sin x7)", 2);
    CHECK(false);
  } catch (const ParseError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("x7") != std::string::npos);
    CHECK(msg.find("dimension 2") != std::string::npos);
  }
}

TEST_CASE("symbolic derivative against finite differences") {
  const char* cases[] = {
      "(add 1 (mul 0.5 (sin x1)))",
      "(tanh x1)",
      "(mul x1 (cos x1))",
      "(exp (mul -0.5 (mul x1 x1)))",
  };
  const double h = 1e-6;
  for (const char* text : cases) {
    auto f = CoefficientFunction::parse(text, 1);
    auto df = f.derivative(0);
    for (double x : {-1.7, -0.2, 0.8, 2.1}) {
      const double fd = (f({x + h}) - f({x - h})) / (2.0 * h);
      CHECK(df({x}) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("iterated and mixed derivatives") {
  // d^2/dx^2 sin(x) = -sin(x)
  auto f = CoefficientFunction::parse("(sin x1)", 1);
  auto d2 = f.derivative(MultiIndex{2});
  CHECK(d2({0.6}) == doctest::Approx(-std::sin(0.6)).epsilon(1e-14));

  // d^2/dx1 dx2 cos(x1 + x2) = -cos(x1 + x2)
  auto g = CoefficientFunction::parse("(cos (add x1 x2))", 2);
  auto d11 = g.derivative(MultiIndex{1, 1});
  CHECK(d11({0.2, 0.5}) == doctest::Approx(-std::cos(0.7)).epsilon(1e-14));

  // Order guard at kMaxDerivativeOrder.
  CHECK_NOTHROW((void)f.derivative(MultiIndex{kMaxDerivativeOrder}));
  CHECK_THROWS((void)f.derivative(MultiIndex{kMaxDerivativeOrder + 1}));
}

TEST_CASE("growth classification") {
  auto growth_of = [](const char* text, int dim) {
    return CoefficientFunction::parse(text, dim).growth();
  };
  CHECK(growth_of("3.5", 1) == GrowthClass::Bounded);
  CHECK(growth_of("(sin x1)", 1) == GrowthClass::Bounded);
  CHECK(growth_of("(add 1 (mul 0.5 (sin x1)))", 1) == GrowthClass::Bounded);
  CHECK(growth_of("(tanh (mul x1 x1))", 1) == GrowthClass::Bounded);
  CHECK(growth_of("x1", 1) == GrowthClass::Linear);
  CHECK(growth_of("(mul x1 (cos x2))", 2) == GrowthClass::Linear);
  CHECK(growth_of("(add x1 (sin x1))", 1) == GrowthClass::Linear);
  CHECK(growth_of("(mul x1 x1)", 1) == GrowthClass::Unknown);
  CHECK(growth_of("(exp x1)", 1) == GrowthClass::Unknown);
  CHECK(growth_of("(exp (sin x1))", 1) == GrowthClass::Bounded);
  CHECK(growth_of("(neg x1)", 1) == GrowthClass::Linear);
}

TEST_CASE("constant detection survives folding") {
  auto c = CoefficientFunction::parse("(add 1 (mul 2 3))", 1);
  CHECK(c.is_constant());
  CHECK(c.constant_value() == doctest::Approx(7.0));

  auto z = CoefficientFunction::parse("(mul 0 (sin x1))", 1);
  CHECK(z.is_zero());

  auto nz = CoefficientFunction::parse("(mul 1 (sin x1))", 1);
  CHECK(!nz.is_constant());
  CHECK_THROWS(nz.constant_value());

  CHECK(CoefficientFunction().is_zero());
  CHECK(CoefficientFunction::constant(4.0).constant_value() == doctest::Approx(4.0));
}

TEST_CASE("round trip through text()") {
  const char* cases[] = {"(add 1 (mul 0.5 (sin x1)))", "(tanh x1)", "(neg (cos (add x1 x2)))"};
  for (const char* text : cases) {
    const int dim = 2;
    auto f = CoefficientFunction::parse(text, dim);
    auto g = CoefficientFunction::parse(f.text(), dim);
    for (double x : {-1.1, 0.4}) {
      CHECK(f({x, 0.7}) == doctest::Approx(g({x, 0.7})).epsilon(1e-15));
    }
  }
}

TEST_CASE("arithmetic combinators used by the conversion code") {
  auto s = CoefficientFunction::parse("(sin x1)", 1);
  auto c = CoefficientFunction::parse("(cos x1)", 1);
  auto sum = s + c;
  auto prod = s * c;
  auto negs = -s;
  for (double x : {-0.9, 0.3, 1.8}) {
    CHECK(sum({x}) == doctest::Approx(std::sin(x) + std::cos(x)).epsilon(1e-15));
    CHECK(prod({x}) == doctest::Approx(std::sin(x) * std::cos(x)).epsilon(1e-15));
    CHECK(negs({x}) == doctest::Approx(-std::sin(x)).epsilon(1e-15));
  }
  CHECK((CoefficientFunction::constant(2.0) + CoefficientFunction::constant(3.0)).constant_value() ==
        doctest::Approx(5.0));
}
