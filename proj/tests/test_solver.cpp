#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npot/solver.hpp"

using namespace npot;

namespace {
MultiIndex mi(std::vector<int> v) { return MultiIndex(std::move(v)); }
}  // namespace

TEST_CASE("system validation") {
  CHECK_NOTHROW(SystemSpec::make(3, 1, 1, 0.5, {"u1^2"}, false));
  CHECK_THROWS(SystemSpec::make(3, 1, 1, 0.5, {"u2"}, false));       // no u2
  CHECK_THROWS(SystemSpec::make(3, 1, 1, 0.5, {"d1_300"}, false));   // order > 2m
  CHECK_THROWS(SystemSpec::make(3, 1, 1, 0.5, {"x1 + u1"}, true));   // not autonomous
  SystemSpec sys = SystemSpec::make(3, 2, 1, 0.5, {"u1 + d1_211"}, false);
  CHECK(sys.dependence == 4);
  auto refs = sys.referenced_derivatives();
  REQUIRE(refs.size() == 1);
  CHECK(refs[0].first == 1);
  CHECK(refs[0].second == mi({2, 1, 1}));
}

TEST_CASE("grid interpolation reproduces cubics with exact jets") {
  double R = 0.5;
  Grid3 g(R, 17);
  Polynomial p(3);
  p.add_term(mi({0, 0, 0}), 0.3);
  p.add_term(mi({1, 1, 0}), -1.2);
  p.add_term(mi({3, 0, 0}), 0.8);
  p.add_term(mi({1, 0, 2}), 0.5);
  for (int i = 0; i < g.npts(); ++i)
    for (int j = 0; j < g.npts(); ++j)
      for (int k = 0; k < g.npts(); ++k) g.at(i, j, k) = p.eval(g.node(i, j, k));

  for (Vec x : {Vec{0.0, 0.0, 0.0}, Vec{0.21, -0.13, 0.07}, Vec{-0.4, 0.3, -0.2}}) {
    CHECK(g.interp(x) == doctest::Approx(p.eval(x)).epsilon(1e-10));
    Jet jg = g.jet(x, 2);
    Jet jp = p.jet(x, 2);
    for (const auto& [idx, c] : jp.coeffs)
      CHECK(jg.coeffs.at(idx) == doctest::Approx(c).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("constant source term gives the explicit radial profile") {
  // Delta u = 1, u = h + omega - jet corrections with h = 0:
  // one Picard step from zero already lands on the fixed point
  SystemSpec sys = SystemSpec::make(3, 1, 1, 0.5, {"1"}, true);
  SolveConfig cfg;
  cfg.R = 0.5;
  cfg.h = {Polynomial(3)};
  cfg.max_iters = 10;
  cfg.tol = 1e-9;
  cfg.level = 6;
  auto [field, report] = picard_solve(sys, cfg);
  CHECK(report.converged);
  CHECK(report.iterations <= 3);

  // theta removes the order-(2m-1) jet at 0, so the solution is
  // (|x|^2 - 3R^2)/6 shifted to vanish at 0 together with its gradient:
  // u(x) = |x|^2/6
  for (Vec x : {Vec{0.2, 0.0, 0.0}, Vec{0.1, -0.15, 0.2}}) {
    double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    CHECK(field.field(0).eval(x) == doctest::Approx(r2 / 6.0).epsilon(1e-5));
  }
}

TEST_CASE("zero source returns the seed polynomial") {
  SystemSpec sys = SystemSpec::make(3, 1, 1, 0.5, {"0"}, true);
  SolveConfig cfg;
  cfg.R = 0.5;
  Polynomial h = Polynomial::monomial(mi({1, 1, 0}), 0.3);
  cfg.h = {h};
  cfg.level = 6;
  auto [field, report] = picard_solve(sys, cfg);
  CHECK(report.converged);
  Vec x{0.2, -0.1, 0.15};
  CHECK(field.field(0).eval(x) == doctest::Approx(h.eval(x)).epsilon(1e-9));
}

TEST_CASE("quadratic nonlinearity converges with prescribed mixed derivative") {
  SystemSpec sys = SystemSpec::make(3, 1, 1, 0.5, {"u1^2"}, false);
  SolveConfig cfg;
  cfg.R = 0.5;
  cfg.h = {Polynomial::monomial(mi({1, 1, 0}), 0.1)};
  cfg.max_iters = 40;
  cfg.tol = 1e-7;
  cfg.level = 6;
  auto [field, report] = picard_solve(sys, cfg);
  CHECK(report.converged);
  CHECK(report.iterations <= 40);
  CHECK(report.residual_rel < 1e-2);

  // the jet corrections force low-order derivatives at 0 to vanish, so the
  // prescribed h-derivative survives exactly
  CHECK(report.jets_at_zero.at("1|(1,1,0)") == doctest::Approx(0.1).epsilon(1e-3));
  CHECK(std::abs(report.jets_at_zero.at("1|(0,0,0)")) < 1e-5);
  CHECK(std::abs(report.jets_at_zero.at("1|(1,0,0)")) < 1e-5);

  // a different seed produces a genuinely different solution
  SolveConfig cfg2 = cfg;
  cfg2.h = {Polynomial::monomial(mi({1, 0, 1}), 0.2)};
  auto [field2, report2] = picard_solve(sys, cfg2);
  CHECK(report2.converged);
  CHECK(field.sup_diff(field2) > 10.0 * cfg.tol);
}

TEST_CASE("evaluator fits the converged iterate") {
  SystemSpec sys = SystemSpec::make(3, 1, 1, 0.5, {"u1^2"}, false);
  SolveConfig cfg;
  cfg.R = 0.5;
  cfg.h = {Polynomial::monomial(mi({1, 1, 0}), 0.1)};
  cfg.max_iters = 40;
  cfg.tol = 1e-7;
  cfg.level = 6;
  auto [field, report] = picard_solve(sys, cfg);
  REQUIRE(report.converged);
  SolutionEvaluator ev = make_evaluator(field, sys, cfg);
  CHECK(ev.fit_rms < 1e-5);
  for (Vec x : {Vec{0.1, 0.1, 0.0}, Vec{-0.2, 0.05, 0.15}}) {
    CHECK(ev.eval(0, x) ==
          doctest::Approx(field.field(0).eval(x)).epsilon(1e-4).scale(1e-4));
  }
}

TEST_CASE("contraction estimate and parameter selection") {
  SystemSpec sys = SystemSpec::make(3, 1, 1, 0.5, {"u1^2"}, false);
  ContractionEstimate est = estimate_contraction(sys, 0.5, 0.5, 500);
  CHECK(est.a0 == doctest::Approx(0.0));
  CHECK(est.delta >= 0.0);
  CHECK(est.eta >= 0.0);

  ParamSelection sel = select_parameters(sys, SelectMode::SMALL_BALL);
  CHECK(sel.ok);
  CHECK(sel.R > 0.0);
  CHECK(sel.R <= 1.0);
  CHECK(sel.gamma > 0.0);

  // a(0) != 0 rules out the autonomous large-R route
  SystemSpec bad = SystemSpec::make(3, 1, 1, 0.5, {"u1 + 1"}, true);
  ParamSelection selb = select_parameters(bad, SelectMode::AUTONOMOUS_LARGE_R);
  CHECK(!selb.ok);
  CHECK(!selb.failure.empty());
}

TEST_CASE("initial value shift substitutes the Taylor polynomial") {
  SystemSpec sys = SystemSpec::make(3, 1, 1, 0.5, {"u1^2 + d1_100"}, false);
  std::map<MultiIndex, double> jet;
  jet[mi({0, 0, 0})] = 0.2;
  jet[mi({1, 0, 0})] = -0.1;
  SystemSpec shifted = initial_value_shift(sys, {jet});

  // at x with u~ = v the shifted rhs equals a(u~ + T, ...) for the original
  dsl::Bindings b{{"x1", 0.3}, {"x2", 0.0}, {"x3", 0.0},
                  {"u1", 0.05}, {"d1_100", 0.4}};
  double T = 0.2 - 0.1 * 0.3;   // T(x)
  double dT = -0.1;             // d/dx1 T
  double expect = (0.05 + T) * (0.05 + T) + (0.4 + dT);
  CHECK(dsl::eval(shifted.rhs[0], b) == doctest::Approx(expect).epsilon(1e-12));
}
