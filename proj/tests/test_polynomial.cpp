#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "npot/polynomial.hpp"

using namespace npot;

namespace {

MultiIndex mi(std::vector<int> v) { return MultiIndex(std::move(v)); }

Polynomial sample_poly() {
  Polynomial p(3);
  p.add_term(mi({0, 0, 0}), 1.5);
  p.add_term(mi({1, 0, 0}), -2.0);
  p.add_term(mi({2, 1, 0}), 0.25);
  p.add_term(mi({0, 0, 3}), 1.0);
  return p;
}

}  // namespace

TEST_CASE("construction and coefficients") {
  Polynomial p = sample_poly();
  CHECK(p.dim() == 3);
  CHECK(p.degree() == 3);
  CHECK(!p.is_homogeneous());
  CHECK(p.coeff(mi({2, 1, 0})) == doctest::Approx(0.25));
  CHECK(p.coeff(mi({5, 0, 0})) == 0.0);
  CHECK(Polynomial(3).degree() == -1);
  CHECK(Polynomial::radius_squared(3).is_homogeneous());
}

TEST_CASE("drop tolerance removes negligible coefficients") {
  Polynomial p(3);
  p.add_term(mi({1, 0, 0}), 1.0);
  p.add_term(mi({1, 0, 0}), -1.0 + 1e-16);
  CHECK(p.coeff(mi({1, 0, 0})) == 0.0);
}

TEST_CASE("arithmetic matches pointwise evaluation") {
  Polynomial p = sample_poly();
  Polynomial q = Polynomial::radius_squared(3) * 0.5 +
                 Polynomial::monomial(mi({0, 1, 0}), -1.0);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec x{uni(rng), uni(rng), uni(rng)};
    CHECK((p + q).eval(x) == doctest::Approx(p.eval(x) + q.eval(x)));
    CHECK((p - q).eval(x) == doctest::Approx(p.eval(x) - q.eval(x)));
    CHECK((p * q).eval(x) == doctest::Approx(p.eval(x) * q.eval(x)));
    CHECK((p * 3.0).eval(x) == doctest::Approx(3.0 * p.eval(x)));
  }
}

TEST_CASE("partial derivatives and laplacian") {
  Polynomial p = sample_poly();
  // d/dx1: -2 + 0.5 x1 x2
  Polynomial d1 = p.partial(0);
  CHECK(d1.coeff(mi({0, 0, 0})) == doctest::Approx(-2.0));
  CHECK(d1.coeff(mi({1, 1, 0})) == doctest::Approx(0.5));
  CHECK(d1.terms().size() == 2);

  // Delta(|x|^2) = 2n
  CHECK(Polynomial::radius_squared(3).laplacian().coeff(mi({0, 0, 0})) ==
        doctest::Approx(6.0));

  // derivative with a multi-index: D^{(2,1,0)} of 0.25 x1^2 x2 = 0.5
  Polynomial d = p.derivative(mi({2, 1, 0}));
  CHECK(d.coeff(mi({0, 0, 0})) == doctest::Approx(0.5));
  CHECK(d.terms().size() == 1);
}

TEST_CASE("jet reproduces the polynomial exactly") {
  Polynomial p = sample_poly();
  Vec base{0.3, -0.4, 0.1};
  Jet j = p.jet(base, p.degree());
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec y{uni(rng), uni(rng), uni(rng)};
    CHECK(j.evaluate(y) == doctest::Approx(p.eval(y)).epsilon(1e-12));
  }
  // truncated jet drops the higher orders
  Jet j1 = p.jet(base, 1);
  for (const auto& [idx, c] : j1.coeffs) CHECK(idx.order() <= 1);
}

TEST_CASE("harmonic decomposition recombines and is harmonic") {
  // homogeneous degree-4 test polynomial
  Polynomial p(3);
  p.add_term(mi({4, 0, 0}), 1.0);
  p.add_term(mi({2, 2, 0}), -0.5);
  p.add_term(mi({1, 1, 2}), 2.0);
  HarmonicDecomposition dec = harmonic_decompose(p);
  CHECK(!dec.components.empty());

  Polynomial back = dec.recombine(3);
  CHECK((back - p).max_abs_coeff() < 1e-10);

  for (const auto& comp : dec.components) {
    CHECK(comp.part.laplacian().max_abs_coeff() < 1e-10);
    if (!comp.part.empty())
      CHECK(comp.part.degree() + 2 * comp.power == 4);
  }
}

TEST_CASE("m-harmonic predicate") {
  Polynomial h(3);  // x1^2 - x2^2 is harmonic
  h.add_term(mi({2, 0, 0}), 1.0);
  h.add_term(mi({0, 2, 0}), -1.0);
  CHECK(is_m_harmonic(h, 1));

  Polynomial r4 = Polynomial::radius_squared(3) * Polynomial::radius_squared(3);
  CHECK(!is_m_harmonic(r4, 1));
  CHECK(!is_m_harmonic(r4, 2));  // Delta^2 |x|^4 = 120
  CHECK(is_m_harmonic(r4, 3));
}

TEST_CASE("str round trips through visual inspection anchors") {
  Polynomial p = Polynomial::monomial(mi({1, 2, 0}), -3.0);
  std::string s = p.str();
  CHECK(s.find('3') != std::string::npos);
}
