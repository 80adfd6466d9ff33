#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npot/potential.hpp"

using namespace npot;

namespace {

MultiIndex mi(std::vector<int> v) { return MultiIndex(std::move(v)); }

Polynomial sample_poly3() {
  Polynomial p(3);
  p.add_term(mi({0, 0, 0}), 0.5);
  p.add_term(mi({2, 0, 0}), 1.0);
  p.add_term(mi({1, 1, 0}), -0.75);
  p.add_term(mi({0, 1, 3}), 0.3);
  p.add_term(mi({4, 0, 0}), 0.2);
  return p;
}

ScalarField bump_field(double R, Vec c, double rad) {
  ScalarField f = ScalarField::from_function(3, R, [c, rad](const Vec& y) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      r2 += (y[i] - c[i]) * (y[i] - c[i]);
    double u = r2 / (rad * rad);
    if (u >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u));
  });
  f.compact_support = true;
  return f;
}

}  // namespace

TEST_CASE("newtonian quadrature matches the closed form") {
  double R = 1.0;
  Polynomial p = sample_poly3();
  ScalarField f = ScalarField::from_polynomial(p, R);
  Polynomial Np = newtonian_polynomial(p, R);
  for (Vec x : {Vec{0.0, 0.0, 0.0}, Vec{0.3, -0.2, 0.1}, Vec{-0.5, 0.1, 0.4}}) {
    CHECK(newtonian(f, x, 16) == doctest::Approx(Np.eval(x)).epsilon(1e-7));
  }
}

TEST_CASE("closed-form potential solves the Poisson equation") {
  double R = 0.8;
  Polynomial p = sample_poly3();
  Polynomial Np = newtonian_polynomial(p, R);
  CHECK((Np.laplacian() - p).max_abs_coeff() < 1e-10);

  // N(1) = (|x|^2 - 3R^2)/6 in dimension 3
  Polynomial N1 = newtonian_polynomial(Polynomial::constant(3, 1.0), R);
  Polynomial expect =
      (Polynomial::radius_squared(3) + Polynomial::constant(3, -3.0 * R * R)) *
      (1.0 / 6.0);
  CHECK((N1 - expect).max_abs_coeff() < 1e-12);
}

TEST_CASE("higher derivatives via n_beta minus t_beta are exact on polynomials") {
  double R = 1.0;
  Polynomial p = sample_poly3();
  ScalarField f = ScalarField::from_polynomial(p, R);
  Polynomial Np = newtonian_polynomial(p, R);
  Vec x{0.25, -0.15, 0.1};
  for (auto bv : {std::vector<int>{2, 0, 0}, std::vector<int>{1, 1, 0},
                  std::vector<int>{2, 1, 0}, std::vector<int>{2, 1, 1},
                  std::vector<int>{2, 2, 0}}) {
    MultiIndex beta = mi(bv);
    double exact = Np.derivative(beta).eval(x);
    double got = d_beta_newtonian(beta, f, x, 16);
    CHECK(got == doctest::Approx(exact).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("recursive assembly agrees with the direct route") {
  double R = 1.0;
  Polynomial p = sample_poly3();
  ScalarField f = ScalarField::from_polynomial(p, R);
  Vec x{0.2, 0.1, -0.2};
  MultiIndex beta = mi({2, 1, 0});
  double direct = d_beta_newtonian(beta, f, x, 16);
  for (const Nesting& nst : enumerate_nestings(beta)) {
    double rec = d_beta_newtonian_recursive(beta, f, x, 16, nst);
    CHECK(rec == doctest::Approx(direct).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("t_beta is independent of the nesting") {
  double R = 1.0;
  ScalarField f = ScalarField::from_polynomial(sample_poly3(), R);
  Vec x{0.15, -0.25, 0.05};
  MultiIndex beta = mi({2, 1, 1});
  auto nestings = enumerate_nestings(beta);
  double ref = t_beta(beta, f, x, nestings.front());
  for (const Nesting& nst : nestings) {
    CHECK(t_beta(beta, f, x, nst) == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
  }
  CHECK(t_beta(beta, f, x) == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
}

TEST_CASE("pv derivative: domain independence and boundary-term identity") {
  // compactly supported bump well inside B_R
  double R = 1.0;
  ScalarField f = bump_field(R, Vec{0.1, 0.0, -0.05}, 0.35);
  Vec x{0.05, 0.05, 0.0};
  MultiIndex beta = mi({1, 1, 0});

  double v1 = pv_derivative(beta, f, x, 14);
  ScalarField f2 = f;
  f2.R = 1.5 * R;  // same field, larger ambient ball
  double v2 = pv_derivative(beta, f2, x, 14);
  CHECK(std::abs(v1 - v2) < 1e-6);

  // pv D^beta N(f) = D^beta N(f) + correction; for the bump both routes exist
  double dn = d_beta_newtonian(beta, f, x, 14);
  double tb = t_beta(beta, f, x);
  CHECK(v1 == doctest::Approx(dn + tb).epsilon(1e-4).scale(1e-3));
}

TEST_CASE("polynomial remainders are cancellation free") {
  double R = 1.0;
  Polynomial p = sample_poly3();
  ScalarField f = ScalarField::from_polynomial(p, R);
  Vec x{0.3, -0.1, 0.2};
  auto rem = f.remainder_at(x, 2);
  // at distance t the remainder is O(t^3); check the scaling at tiny t where
  // a direct f(y) - T(y) subtraction would be pure roundoff
  Vec dir{0.6, 0.64, 0.48};
  double prev = 0.0;
  for (double t : {1e-3, 1e-4, 1e-5}) {
    Vec y{x[0] + t * dir[0], x[1] + t * dir[1], x[2] + t * dir[2]};
    double r = rem(y);
    double scaled = r / (t * t * t);
    if (prev != 0.0) CHECK(scaled == doctest::Approx(prev).epsilon(1e-2));
    prev = scaled;
  }
  // dropping everything leaves zero
  auto all = f.remainder_at(x, p.degree());
  CHECK(all(Vec{0.9, 0.0, 0.0}) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("finite-difference jets reproduce polynomial derivatives") {
  Polynomial p = sample_poly3();
  auto ev = [&p](const Vec& y) { return p.eval(y); };
  Vec x{0.2, 0.3, -0.1};
  CHECK(fd_derivative(ev, x, mi({1, 0, 0}), 5e-2) ==
        doctest::Approx(p.partial(0).eval(x)).epsilon(1e-8));
  CHECK(fd_derivative(ev, x, mi({2, 1, 0}), 5e-2) ==
        doctest::Approx(p.derivative(mi({2, 1, 0})).eval(x)).epsilon(1e-6));
  Jet j = fd_jet(ev, x, 2, 5e-2);
  Jet exact = p.jet(x, 2);
  for (const auto& [idx, c] : exact.coeffs) {
    CHECK(j.coeffs.at(idx) == doctest::Approx(c).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("holder norm estimates are sane on a lipschitz field") {
  double R = 1.0;
  Polynomial p = Polynomial::monomial(mi({1, 0, 0}), 2.0);  // f = 2 x1
  ScalarField f = ScalarField::from_polynomial(p, R);
  NormEstimate est = holder_norms(f, 0.5, 0, 400);
  // sup over |x| <= 0.8: |2 x1| <= 1.6;
  // H_{1/2}[f] = sup 2|x1-y1| / |x-y|^{1/2} <= 2 (1.6)^{1/2}
  CHECK(est.sup_norm <= 1.6 + 1e-9);
  CHECK(est.sup_norm > 1.0);
  CHECK(est.holder_seminorm <= 2.0 * std::sqrt(1.6) + 1e-9);
  CHECK(est.holder_seminorm > 1.0);
  CHECK(est.composite == doctest::Approx(est.sup_norm +
                                         est.holder_seminorm).epsilon(1e-12));
}
