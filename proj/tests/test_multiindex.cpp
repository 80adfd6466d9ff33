#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "npot/multiindex.hpp"

using namespace npot;

namespace {
MultiIndex mi(std::vector<int> v) { return MultiIndex(std::move(v)); }
}  // namespace

TEST_CASE("order and factorial") {
  CHECK(mi({0, 0, 0}).order() == 0);
  CHECK(mi({2, 1, 3}).order() == 6);
  CHECK(mi({0, 0, 0}).factorial() == 1);
  CHECK(mi({2, 1, 3}).factorial() == 2 * 1 * 6);
  CHECK(mi({4, 4, 4}).factorial() == 24LL * 24 * 24);
}

TEST_CASE("order cap") {
  CHECK_THROWS(mi({MultiIndex::kMaxOrder + 1, 0, 0}));
  CHECK_NOTHROW(mi({MultiIndex::kMaxOrder, 0, 0}));
}

TEST_CASE("unit and zero") {
  CHECK(MultiIndex::zero(4).order() == 0);
  CHECK(MultiIndex::zero(4).dim() == 4);
  MultiIndex e2 = MultiIndex::unit(3, 1);
  CHECK(e2[0] == 0);
  CHECK(e2[1] == 1);
  CHECK(e2[2] == 0);
}

TEST_CASE("componentwise comparison and arithmetic") {
  MultiIndex a = mi({1, 0, 2});
  MultiIndex b = mi({2, 1, 2});
  CHECK(a.leq(b));
  CHECK(!b.leq(a));
  CHECK((b - a) == mi({1, 1, 0}));
  CHECK((a + mi({1, 1, 0})) == b);
  CHECK(a.plus(1) == mi({1, 1, 2}));
  CHECK(b.minus(0) == mi({1, 1, 2}));
  CHECK_THROWS(a - b);
}

TEST_CASE("power is the shifted monomial") {
  MultiIndex a = mi({2, 0, 1});
  Vec y{1.5, -2.0, 0.5};
  Vec base{0.5, 1.0, -0.5};
  double expect = (1.5 - 0.5) * (1.5 - 0.5) * (0.5 + 0.5);
  CHECK(a.power(y, base) == doctest::Approx(expect));
  CHECK(a.power(y) == doctest::Approx(1.5 * 1.5 * 0.5));
}

TEST_CASE("indices_of_order enumerates the full simplex") {
  // number of n-tuples summing to k is C(k+n-1, n-1)
  CHECK(indices_of_order(3, 0).size() == 1);
  CHECK(indices_of_order(3, 2).size() == 6);
  CHECK(indices_of_order(3, 4).size() == 15);
  CHECK(indices_of_order(4, 3).size() == 20);
  std::set<MultiIndex> seen;
  for (const auto& b : indices_of_order(3, 4)) {
    CHECK(b.order() == 4);
    seen.insert(b);
  }
  CHECK(seen.size() == 15);  // no duplicates
}

TEST_CASE("lambda_set holds the odd-entry order-2m indices") {
  for (int m : {1, 2}) {
    auto all = indices_of_order(3, 2 * m);
    auto lam = lambda_set(3, m);
    std::set<MultiIndex> lamset(lam.begin(), lam.end());
    for (const auto& b : all) {
      bool odd = false;
      for (int i = 0; i < 3; ++i) odd = odd || (b[i] % 2 == 1);
      CHECK(lamset.count(b) == (odd ? 1u : 0u));
    }
  }
  CHECK(lambda_set(3, 1).size() == 3);  // (1,1,0),(1,0,1),(0,1,1)
}

TEST_CASE("nesting enumeration") {
  MultiIndex beta = mi({2, 1, 0});
  auto nestings = enumerate_nestings(beta);
  // |beta|!/beta! = 6/2 = 3 distinct increasing chains
  CHECK(nestings.size() == 3);
  for (const auto& nst : nestings) {
    CHECK(nst.target == beta);
    CHECK(static_cast<int>(nst.steps.size()) == beta.order());
    MultiIndex prev = MultiIndex::zero(3);
    for (const auto& step : nst.steps) {
      CHECK(prev.leq(step));
      CHECK(step.order() == prev.order() + 1);
      prev = step;
    }
    CHECK(prev == beta);
  }
  CHECK(enumerate_nestings(mi({1, 1, 1})).size() == 6);
  CHECK(enumerate_nestings(mi({3, 0, 0})).size() == 1);
}

TEST_CASE("dual splits a derivative") {
  MultiIndex beta = mi({2, 1, 1});
  MultiIndex gamma = mi({1, 0, 1});
  CHECK(dual(gamma, beta) == mi({1, 1, 0}));
  CHECK((gamma + dual(gamma, beta)) == beta);
  CHECK_THROWS(dual(mi({3, 0, 0}), beta));
}

TEST_CASE("jet evaluation is a Taylor sum") {
  // f(y) = 2 + 3(y1-1) + 0.5(y2+2)^2 at base (1,-2,0)
  Jet j;
  j.base = {1.0, -2.0, 0.0};
  j.order = 2;
  j.coeffs[mi({0, 0, 0})] = 2.0;
  j.coeffs[mi({1, 0, 0})] = 3.0;
  j.coeffs[mi({0, 2, 0})] = 0.5;
  Vec y{1.5, -1.0, 4.0};
  CHECK(j.evaluate(y) == doctest::Approx(2.0 + 3.0 * 0.5 + 0.5 * 1.0));
}
