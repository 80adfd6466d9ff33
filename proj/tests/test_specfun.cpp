#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npot/quadrature.hpp"
#include "npot/specfun.hpp"

using namespace npot;

namespace {
MultiIndex mi(std::vector<int> v) { return MultiIndex(std::move(v)); }
}  // namespace

TEST_CASE("gamma function against known values") {
  CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gamma_fn(1.5) == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-12));
  CHECK(gamma_fn(7.5) == doctest::Approx(1871.254305797788).epsilon(1e-10));
}

TEST_CASE("ball volume and sphere area") {
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-13));
  CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * M_PI).epsilon(1e-13));
  CHECK(unit_ball_volume(4) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-13));
  CHECK(unit_sphere_area(4) == doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-13));
  CHECK(unit_ball_volume(5) == doctest::Approx(8.0 * M_PI * M_PI / 15.0).epsilon(1e-13));
  for (int n = 3; n <= 6; ++n)
    CHECK(unit_sphere_area(n) == doctest::Approx(n * unit_ball_volume(n)));
}

TEST_CASE("gegenbauer against explicit low-order formulas") {
  for (double rho : {0.5, 1.0, 1.5}) {
    for (double t : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
      CHECK(gegenbauer(0, rho, t) == doctest::Approx(1.0));
      CHECK(gegenbauer(1, rho, t) == doctest::Approx(2.0 * rho * t));
      CHECK(gegenbauer(2, rho, t) ==
            doctest::Approx(2.0 * rho * (rho + 1.0) * t * t - rho).epsilon(1e-13));
    }
  }
  // rho = 1/2 gives the Legendre polynomials: P_3(t) = (5t^3 - 3t)/2
  double t = 0.6;
  CHECK(gegenbauer(3, 0.5, t) ==
        doctest::Approx((5.0 * t * t * t - 3.0 * t) / 2.0).epsilon(1e-13));
}

TEST_CASE("gegenbauer norm against direct quadrature") {
  // ||C_l^{(rho)}||^2 with weight (1-t^2)^{rho-1/2}, computed by Gauss-Jacobi
  std::vector<double> t, w;
  for (double rho : {0.5, 1.0, 1.5}) {
    gauss_jacobi(200, rho - 0.5, rho - 0.5, t, w);
    for (int l = 0; l <= 6; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        double c = gegenbauer(l, rho, t[i]);
        s += w[i] * c * c;
      }
      CHECK(gegenbauer_norm(l, rho) == doctest::Approx(s).epsilon(1e-9));
    }
  }
}

TEST_CASE("fundamental solution normalization") {
  FundamentalSolution d3{3, Convention::DELTA};
  CHECK(d3.c() == doctest::Approx(-1.0 / (4.0 * M_PI)).epsilon(1e-13));
  FundamentalSolution r3{3, Convention::RAW};
  CHECK(r3.c() == 1.0);
  Vec x{0.5, 0.0, 0.0};
  CHECK(d3.gamma_at(x) == doctest::Approx(-1.0 / (4.0 * M_PI * 0.5)).epsilon(1e-13));
  CHECK(r3.gamma_at(x) == doctest::Approx(2.0));
  CHECK_THROWS(d3.gamma_at(Vec{0.0, 0.0, 0.0}));
}

TEST_CASE("symbolic gamma derivatives match finite differences") {
  for (int n : {3, 4}) {
    FundamentalSolution fs{n, Convention::DELTA};
    Vec x(n, 0.0);
    x[0] = 0.4;
    x[1] = -0.3;
    x[n - 1] = 0.2;
    double h = 1e-4;
    for (auto bv : {std::vector<int>{1, 0, 0}, std::vector<int>{2, 0, 0},
                    std::vector<int>{1, 1, 0}}) {
      std::vector<int> ext(bv);
      ext.resize(n, 0);
      MultiIndex beta(ext);
      gamma_table(n).get(beta);
      double sym = d_gamma(beta, fs, x);

      // central differences of gamma_at, one nesting of the derivative
      auto fd = [&](auto&& self, const MultiIndex& b, const Vec& p) -> double {
        if (b.order() == 0) return fs.gamma_at(p);
        int ax = -1;
        for (int i = 0; i < n; ++i)
          if (b[i] > 0) { ax = i; break; }
        Vec pp = p, pm = p;
        pp[ax] += h;
        pm[ax] -= h;
        return (self(self, b.minus(ax), pp) - self(self, b.minus(ax), pm)) /
               (2.0 * h);
      };
      double num = fd(fd, beta, x);
      CHECK(sym == doctest::Approx(num).epsilon(1e-5));
    }
  }
}

TEST_CASE("first gamma derivative closed form") {
  // D^{e1} |x|^{2-n} = (2-n) x1 |x|^{-n}
  for (int n : {3, 5}) {
    FundamentalSolution fs{n, Convention::RAW};
    Vec x(n, 0.0);
    x[0] = 0.7;
    x[1] = -0.2;
    double r = std::sqrt(0.7 * 0.7 + 0.04);
    MultiIndex e1 = MultiIndex::unit(n, 0);
    CHECK(d_gamma(e1, fs, x) ==
          doctest::Approx((2.0 - n) * 0.7 * std::pow(r, -static_cast<double>(n)))
              .epsilon(1e-12));
  }
}

TEST_CASE("kernel gegenbauer expansion converges to the kernel") {
  FundamentalSolution fs{3, Convention::DELTA};
  double R = 1.0;
  Vec x{0.2, 0.1, -0.1};
  Vec yhat{0.36, 0.48, 0.8};  // unit vector
  Vec diff{x[0] - R * yhat[0], x[1] - R * yhat[1], x[2] - R * yhat[2]};
  double exact = fs.gamma_at(diff);
  double prev_err = 1e300;
  for (int L : {4, 8, 16, 32}) {
    ExpansionResult er = kernel_gegenbauer_expansion(fs, x, R, yhat, L);
    double err = std::abs(er.value - exact);
    CHECK(err <= er.tail_bound * 1.001 + 1e-14);
    CHECK(err <= prev_err + 1e-14);
    prev_err = err;
  }
  ExpansionResult fine = kernel_gegenbauer_expansion(fs, x, R, yhat, 48);
  CHECK(fine.value == doctest::Approx(exact).epsilon(1e-10));
}
