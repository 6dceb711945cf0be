#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hflow/operators.hpp"
#include "oracle.hpp"

using namespace hflow;

namespace {

OperatorSpec heat_1d() {
  return OperatorSpec::standard(
      1, {CoefficientFunction::constant(1.0)}, {CoefficientFunction()}, {CoefficientFunction()},
      CoefficientFunction());
}

OperatorSpec variable_1d() {
  // sigma = 1 + sin(x)/2, f = x, g = cos x, h = tanh x.
  return OperatorSpec::standard(1, {CoefficientFunction::parse("(add 1 (mul 0.5 (sin x1)))", 1)},
                                {CoefficientFunction::parse("x1", 1)},
                                {CoefficientFunction::parse("(tanh x1)", 1)},
                                CoefficientFunction::parse("(cos x1)", 1));
}

}  // namespace

TEST_CASE("multiply_field constant fast path is exact") {
  ExpansionSampler sampler{1, 9, 1.5, 2};
  HermiteExpansion phi = sampler(0);
  HermiteExpansion out = multiply_field(CoefficientFunction::constant(2.5), phi, 11);
  REQUIRE(out.truncation() == 11);
  for_each_box(1, 9, [&](const MultiIndex& n) { CHECK(out.coeff(n) == 2.5 * phi.coeff(n)); });
  CHECK(out.flat(10) == 0.0);
  CHECK(out.flat(11) == 0.0);
}

TEST_CASE("multiply_field by x equals the position ladder") {
  ExpansionSampler sampler{1, 8, 1.5, 3};
  HermiteExpansion phi = sampler(1);
  HermiteExpansion via_quad = multiply_field(CoefficientFunction::parse("x1", 1), phi, 9);
  HermiteExpansion via_ladder = apply_position(0, phi);
  for (std::size_t i = 0; i < via_ladder.size(); ++i)
    CHECK(via_quad.flat(i) == doctest::Approx(via_ladder.flat(i)).epsilon(1e-13));
}

TEST_CASE("multiply_field coefficients match a trapezoid oracle") {
  // <sin(x) h_0, h_k> computed independently on a wide window.
  HermiteExpansion e0 = HermiteExpansion::basis(MultiIndex{0});
  HermiteExpansion prod =
      multiply_field(CoefficientFunction::parse("(sin x1)", 1), e0, 6);
  std::vector<double> hk(7);
  for (int k = 0; k <= 6; ++k) {
    auto integrand = [&](double x) {
      std::vector<double> vals(7);
      hermite_values(6, x, vals);
      return std::sin(x) * oracle::h0(x) * vals[k];
    };
    const double want = oracle::trapezoid(integrand, -10.0, 10.0, 20000);
    CHECK(prod.flat(k) == doctest::Approx(want).epsilon(1e-11));
  }
}

TEST_CASE("multiply_field honors the aliasing guard") {
  HermiteExpansion e0 = HermiteExpansion::basis(MultiIndex{0}, 4);
  CHECK_THROWS(multiply_field(CoefficientFunction::parse("(sin x1)", 1), e0, 6, 5));
  CHECK_NOTHROW(multiply_field(CoefficientFunction::parse("(sin x1)", 1), e0, 6, 7));
}

TEST_CASE("heat operator on the ground state") {
  // L = d^2/2: L h_0 = -h_0/4 + sqrt(1/8) h_2, so <L h_0, h_0> = -1/4.
  OperatorSpec spec = heat_1d();
  HermiteExpansion e0 = HermiteExpansion::basis(MultiIndex{0});
  HermiteExpansion Lh0 = apply_L(spec, e0);
  REQUIRE(Lh0.truncation() == 2);
  CHECK(Lh0.flat(0) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(Lh0.flat(1) == doctest::Approx(0.0));
  CHECK(Lh0.flat(2) == doctest::Approx(std::sqrt(0.125)).epsilon(1e-14));
  CHECK(inner0(Lh0, e0) == doctest::Approx(-0.25).epsilon(1e-14));
}

TEST_CASE("apply_L pointwise against finite differences") {
  OperatorSpec spec = variable_1d();
  ExpansionSampler sampler{1, 12, 3.0, 17};
  HermiteExpansion phi = sampler(0);
  // Generous output truncation; the remaining discrepancy is the projection
  // tail of the tanh/cos products (sub-geometric decay), a few 1e-5 absolute.
  HermiteExpansion Lphi = apply_L(spec, phi, phi.truncation() + 14);

  const double hstep = 1e-4;
  for (double x : {-1.3, -0.2, 0.7, 1.9}) {
    const double sig = 1.0 + 0.5 * std::sin(x);
    const double d2 =
        (phi.value(x + hstep) - 2.0 * phi.value(x) + phi.value(x - hstep)) / (hstep * hstep);
    const double d1 = (phi.value(x + hstep) - phi.value(x - hstep)) / (2.0 * hstep);
    const double want = 0.5 * sig * sig * d2 + x * d1 + std::cos(x) * phi.value(x);
    CHECK(Lphi.value(x) == doctest::Approx(want).epsilon(2e-4));
  }
}

TEST_CASE("apply_A pointwise against finite differences") {
  OperatorSpec spec = variable_1d();
  ExpansionSampler sampler{1, 12, 3.0, 19};
  HermiteExpansion phi = sampler(0);
  HermiteExpansion Aphi = apply_A(spec, 0, phi, phi.truncation() + 14);

  const double hstep = 1e-5;
  for (double x : {-1.1, 0.4, 1.5}) {
    const double d1 = (phi.value(x + hstep) - phi.value(x - hstep)) / (2.0 * hstep);
    const double want = (1.0 + 0.5 * std::sin(x)) * d1 + std::tanh(x) * phi.value(x);
    CHECK(Aphi.value(x) == doctest::Approx(want).epsilon(2e-4));
  }
}

TEST_CASE("pure-drift A equals the derivative ladder") {
  OperatorSpec spec = OperatorSpec::standard(1, {CoefficientFunction::constant(1.0)},
                                             {CoefficientFunction()}, {CoefficientFunction()},
                                             CoefficientFunction());
  ExpansionSampler sampler{1, 7, 1.5, 29};
  HermiteExpansion phi = sampler(0);
  HermiteExpansion direct = apply_derivative(0, phi).resized(9);
  HermiteExpansion viaA = apply_A(spec, 0, phi);
  REQUIRE(viaA.truncation() == 9);
  for (std::size_t i = 0; i < viaA.size(); ++i)
    CHECK(viaA.flat(i) == doctest::Approx(direct.flat(i)).epsilon(1e-14));
}

TEST_CASE("adjoint conversion closed forms in one dimension") {
  // sigma = sin x, b = 0:
  //   sigma~ = -sin x, h = -cos x, f = d(sin^2) = sin 2x, g = (sin^2)''/2 = cos 2x.
  OperatorSpec adj = OperatorSpec::adjoint(1, {CoefficientFunction::parse("(sin x1)", 1)},
                                           {CoefficientFunction()});
  OperatorSpec conv = adjoint_to_standard(adj);
  REQUIRE(conv.form == OperatorSpec::Form::Standard);
  for (double x : {-2.1, -0.4, 0.0, 0.8, 1.7}) {
    CHECK(conv.sigma_at(0, 0)({x}) == doctest::Approx(-std::sin(x)).epsilon(1e-14));
    CHECK(conv.h[0]({x}) == doctest::Approx(-std::cos(x)).epsilon(1e-14));
    CHECK(conv.f[0]({x}) == doctest::Approx(std::sin(2.0 * x)).epsilon(1e-13));
    CHECK(conv.g({x}) == doctest::Approx(std::cos(2.0 * x)).epsilon(1e-13));
  }
}

TEST_CASE("direct and converted adjoint applications agree") {
  ExpansionSampler sampler{1, 14, 3.0, 42};

  SUBCASE("constant sigma with affine drift") {
    OperatorSpec adj = OperatorSpec::adjoint(
        1, {CoefficientFunction::constant(0.7)},
        {CoefficientFunction::parse("(add 0.2 (mul -0.5 x1))", 1)});
    AdjointCheckResult r = adjoint_equivalence_check(adj, sampler, 6);
    CHECK(r.max_rel_error < 1e-12);
    CHECK(r.rows.size() == 12);  // L and A1 per sample
  }

  SUBCASE("variable sigma") {
    OperatorSpec adj = OperatorSpec::adjoint(
        1, {CoefficientFunction::parse("(add 0.3 (mul 0.2 (sin x1)))", 1)},
        {CoefficientFunction::parse("(mul 0.5 x1)", 1)});
    AdjointCheckResult r = adjoint_equivalence_check(adj, sampler, 6);
    CHECK(r.max_rel_error < 1e-8);
  }

  SUBCASE("two dimensions, asymmetric drift, off-diagonal sigma") {
    ExpansionSampler sampler2{2, 8, 3.0, 42};
    OperatorSpec adj = OperatorSpec::adjoint(
        2,
        {CoefficientFunction::parse("(add 0.8 (mul 0.2 (sin x1)))", 2),
         CoefficientFunction::parse("(mul 0.1 (cos x2))", 2),
         CoefficientFunction::parse("(mul 0.1 (sin x1))", 2),
         CoefficientFunction::parse("(add 0.8 (mul 0.2 (cos x2)))", 2)},
        {CoefficientFunction::parse("(mul 0.3 x2)", 2),
         CoefficientFunction::parse("(add (mul 0.1 x1) -0.2)", 2)});
    AdjointCheckResult r = adjoint_equivalence_check(adj, sampler2, 4);
    CHECK(r.max_rel_error < 1e-8);
  }
}

TEST_CASE("the zero-order conversion sign is the one equivalence accepts") {
  // With h flipped to +sum_j d_j sigma_ji the two routes must visibly
  // disagree; guards the sign convention against regressions.
  ExpansionSampler sampler{1, 12, 3.0, 7};
  OperatorSpec adj = OperatorSpec::adjoint(1, {CoefficientFunction::parse("(sin x1)", 1)},
                                           {CoefficientFunction()});
  OperatorSpec conv = adjoint_to_standard(adj);
  OperatorSpec flipped = conv;
  flipped.h[0] = -conv.h[0];

  HermiteExpansion phi = sampler(0);
  HermiteExpansion direct = apply_A(adj, 0, phi);
  HermiteExpansion good = apply_A(conv, 0, phi);
  HermiteExpansion bad = apply_A(flipped, 0, phi);

  HermiteExpansion dgood = direct;
  dgood -= good;
  HermiteExpansion dbad = direct;
  dbad -= bad;
  CHECK(norm0(dgood) / norm0(direct) < 1e-9);
  CHECK(norm0(dbad) / norm0(direct) > 1e-2);
}

TEST_CASE("assembled matrices reproduce direct application") {
  OperatorSpec spec = variable_1d();
  const int N = 10;
  AssembledOperators ops = assemble(spec, N);
  REQUIRE(ops.L.in_truncation() == N);
  REQUIRE(ops.L.out_truncation() == N + 2);
  REQUIRE(ops.A.size() == 1);

  ExpansionSampler sampler{1, N, 2.0, 4};
  HermiteExpansion phi = sampler(0);

  HermiteExpansion via_mat = ops.L.apply(phi);
  HermiteExpansion direct = apply_L(spec, phi, N + 2);
  for (std::size_t i = 0; i < via_mat.size(); ++i)
    CHECK(via_mat.flat(i) == doctest::Approx(direct.flat(i)).epsilon(1e-12));

  HermiteExpansion via_A = ops.A[0].apply(phi);
  HermiteExpansion direct_A = apply_A(spec, 0, phi, N + 2);
  for (std::size_t i = 0; i < via_A.size(); ++i)
    CHECK(via_A.flat(i) == doctest::Approx(direct_A.flat(i)).epsilon(1e-12));
}

TEST_CASE("assemble parallel and reference agree bitwise") {
  OperatorSpec spec = variable_1d();
  AssembledOperators par = assemble(spec, 8);
  AssembledOperators ref = assemble_reference(spec, 8);
  for (Eigen::Index r = 0; r < par.L.rows(); ++r)
    for (Eigen::Index c = 0; c < par.L.cols(); ++c) {
      CHECK(par.L.entry(r, c) == ref.L.entry(r, c));
      CHECK(par.A[0].entry(r, c) == ref.A[0].entry(r, c));
    }
}

TEST_CASE("square and tail blocks partition the matrix") {
  OperatorSpec spec = heat_1d();
  const int N = 6;
  AssembledOperators ops = assemble(spec, N);
  Eigen::MatrixXd sq = ops.L.square_block();
  Eigen::MatrixXd tail = ops.L.tail_block();
  CHECK(sq.rows() == 7);
  CHECK(tail.rows() == 2);
  CHECK(sq.cols() == 7);

  // Heat operator: the tail row for h_{N+2} picks up (1/2) d^2 h_N, and
  // d^2 h_N carries sqrt((N+1)(N+2))/2 on h_{N+2}, so the entry magnitude is
  // sqrt((N+1)(N+2))/4.
  const double mag = std::abs(tail(1, N));
  CHECK(mag == doctest::Approx(0.25 * std::sqrt((N + 1.0) * (N + 2.0))).epsilon(1e-13));
}

TEST_CASE("validation rejects growth violations with field labels") {
  // Unbounded sigma.
  OperatorSpec bad;
  bad.dim = 1;
  bad.form = OperatorSpec::Form::Standard;
  bad.sigma = {CoefficientFunction::parse("x1", 1)};
  bad.f = {CoefficientFunction()};
  bad.h = {CoefficientFunction()};
  bad.g = CoefficientFunction();
  auto problems = bad.validate();
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("sigma[1,1]") != std::string::npos);
  CHECK(problems[0].find("linear") != std::string::npos);
  CHECK_THROWS_AS(bad.require_valid(), std::invalid_argument);

  // Quadratic drift.
  OperatorSpec bad2 = bad;
  bad2.sigma = {CoefficientFunction::constant(1.0)};
  bad2.f = {CoefficientFunction::parse("(mul x1 x1)", 1)};
  problems = bad2.validate();
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("f[1]") != std::string::npos);

  // Wrong coefficient family for the form.
  OperatorSpec bad3 = bad2;
  bad3.f = {CoefficientFunction()};
  bad3.b = {CoefficientFunction()};
  problems = bad3.validate();
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("drift b") != std::string::npos);

  CHECK(heat_1d().validate().empty());
  CHECK(variable_1d().validate().empty());
}
