#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hflow/sobolev.hpp"

using namespace hflow;

TEST_CASE("old_norm closed forms") {
  // ||h_2||_1 = (2*2 + 1)^1 = 5 in one dimension.
  HermiteExpansion e2 = HermiteExpansion::basis(MultiIndex{2});
  CHECK(old_norm(e2, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(old_norm(e2, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(old_norm(e2, 2) == doctest::Approx(25.0).epsilon(1e-15));

  // d = 2: ||h_(1,2)||_1 = 2*3 + 2 = 8.
  HermiteExpansion e12 = HermiteExpansion::basis(MultiIndex{1, 2});
  CHECK(old_norm(e12, 1) == doctest::Approx(8.0).epsilon(1e-15));

  // Two-term Pythagoras: c_0 h_0 + c_2 h_2 at p = 1.
  HermiteExpansion mix(1, 2);
  mix.flat(0) = 3.0;
  mix.flat(2) = 4.0;
  CHECK(old_norm(mix, 1) == doctest::Approx(std::sqrt(9.0 * 1.0 + 16.0 * 25.0)).epsilon(1e-15));

  CHECK_THROWS(old_norm(mix, -1));
}

TEST_CASE("new_inner ground-state value 17/4 at p = 1") {
  // Terms: 1 (identity) + 1/2 (x) + 1/2 (d) + 3/4 (x^2) + 3/4 (d^2) + 3/4 (x d).
  HermiteExpansion e0 = HermiteExpansion::basis(MultiIndex{0});
  CHECK(new_inner(e0, e0, 1) == doctest::Approx(4.25).epsilon(1e-14));
  CHECK(new_norm(e0, 1) == doctest::Approx(std::sqrt(4.25)).epsilon(1e-14));
}

TEST_CASE("new_inner reduces to L2 at p = 0 and is symmetric bilinear") {
  ExpansionSampler sampler{1, 10, 1.5, 321};
  HermiteExpansion a = sampler(0), b = sampler(1), c = sampler(2);

  CHECK(new_inner(a, b, 0) == doctest::Approx(inner0(a, b)).epsilon(1e-14));

  const double ab = new_inner(a, b, 2);
  const double ba = new_inner(b, a, 2);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-12));

  // Linearity in the first slot: <a + 2c, b> = <a,b> + 2<c,b>.
  HermiteExpansion a2c = a;
  HermiteExpansion c2 = c;
  c2 *= 2.0;
  a2c += c2;
  CHECK(new_inner(a2c, b, 1) ==
        doctest::Approx(new_inner(a, b, 1) + 2.0 * new_inner(c, b, 1)).epsilon(1e-12));

  // Positive definiteness on a nonzero sample.
  CHECK(new_inner(a, a, 2) > 0.0);
}

TEST_CASE("hs_norm_sq sums the component norms") {
  ExpansionSampler sampler{1, 8, 1.5, 11};
  std::vector<HermiteExpansion> v = {sampler(0), sampler(1)};
  CHECK(hs_norm_sq(v, 1) ==
        doctest::Approx(new_inner(v[0], v[0], 1) + new_inner(v[1], v[1], 1)).epsilon(1e-14));
}

TEST_CASE("sampler is deterministic and nested across truncations") {
  ExpansionSampler sampler{2, 12, 2.0, 777};
  HermiteExpansion a = sampler(3);
  HermiteExpansion b = sampler(3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.flat(i) == b.flat(i));

  // Truncating the wide draw reproduces the narrow draw coefficient-for-
  // coefficient: the addressing is by multi-index, not storage slot.
  HermiteExpansion narrow = sampler.at_truncation(3, 6);
  for_each_box(2, 6, [&](const MultiIndex& n) { CHECK(narrow.coeff(n) == a.coeff(n)); });

  HermiteExpansion other = sampler(4);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || (a.flat(i) != other.flat(i));
  CHECK(differs);
}

TEST_CASE("sampler damping shrinks high modes") {
  ExpansionSampler sampler{1, 32, 3.0, 5};
  double low = 0.0, high = 0.0;
  for (int t = 0; t < 50; ++t) {
    HermiteExpansion phi = sampler(t);
    low += std::abs(phi.flat(1));
    high += std::abs(phi.flat(31));
  }
  // (1+31)^-3 vs (1+1)^-3: four orders of magnitude.
  CHECK(high < 1e-3 * low);
}

TEST_CASE("equivalence sweep: ratios bounded, reference bitwise identical") {
  ExpansionSampler sampler{1, 24, 3.0, 42};
  const std::vector<int> truncs = {12, 24};
  EquivalenceReport par = equivalence_sweep(sampler, 1, 40, truncs);
  EquivalenceReport ref = equivalence_sweep_reference(sampler, 1, 40, truncs);

  REQUIRE(par.ratios.size() == 2);
  for (std::size_t ti = 0; ti < 2; ++ti) {
    REQUIRE(par.ratios[ti].size() == 40);
    for (std::size_t t = 0; t < 40; ++t) {
      CHECK(std::isfinite(par.ratios[ti][t]));
      CHECK(par.ratios[ti][t] > 0.0);
      CHECK(par.ratios[ti][t] == ref.ratios[ti][t]);  // bitwise
    }
  }
  CHECK(par.ratio_min[0] <= par.ratio_max[0]);

  // Equivalence in action: the drift between consecutive truncations stays
  // well under unity for damped samples.
  CHECK(max_drift(par) < 0.5);
}

TEST_CASE("norm equivalence sandwich on single basis functions") {
  // On one basis function both norms are explicit: old gives (2n+1)^p; the
  // new norm is within dimension-free constant multiples for fixed p.
  for (int n : {0, 1, 4, 9}) {
    HermiteExpansion e = HermiteExpansion::basis(MultiIndex{n});
    const double range = new_norm(e, 1) / old_norm(e, 1);
    CHECK(range > 0.1);
    CHECK(range < 10.0);
  }
}
