#include "npot/specfun.hpp"

#include <cmath>
#include <stdexcept>

namespace npot {

double gamma_fn(double x) {
  // Lanczos, g = 7, 9 terms.
  static const double g = 7.0;
  static const double coef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // reflection
    return M_PI / (std::sin(M_PI * x) * gamma_fn(1.0 - x));
  }
  x -= 1.0;
  double a = coef[0];
  double t = x + g + 0.5;
  for (int i = 1; i < 9; ++i) a += coef[i] / (x + i);
  return std::sqrt(2.0 * M_PI) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

double unit_ball_volume(int n) {
  return std::pow(M_PI, n / 2.0) / gamma_fn(n / 2.0 + 1.0);
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

double gegenbauer(int l, double rho, double t) {
  if (l < 0) throw std::invalid_argument("gegenbauer: l >= 0");
  if (l == 0) return 1.0;
  double cm2 = 1.0;
  double cm1 = 2.0 * rho * t;
  if (l == 1) return cm1;
  double c = 0.0;
  for (int k = 2; k <= l; ++k) {
    c = (2.0 * t * (k + rho - 1.0) * cm1 - (k + 2.0 * rho - 2.0) * cm2) / k;
    cm2 = cm1;
    cm1 = c;
  }
  return c;
}

double gegenbauer_norm(int l, double rho) {
  if (l < 0 || rho <= 0) throw std::invalid_argument("gegenbauer_norm: bad args");
  double lf = 1.0;
  for (int i = 2; i <= l; ++i) lf *= i;
  return M_PI * std::pow(2.0, 1.0 - 2.0 * rho) * gamma_fn(l + 2.0 * rho) /
         (lf * (l + rho) * gamma_fn(rho) * gamma_fn(rho));
}

double FundamentalSolution::c() const {
  if (convention == Convention::RAW) return 1.0;
  return 1.0 / ((2.0 - n) * unit_sphere_area(n));
}

double FundamentalSolution::gamma_at(const Vec& x) const {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  if (r2 == 0.0) throw std::domain_error("Gamma evaluated at the origin");
  return c() * std::pow(r2, (2.0 - n) / 2.0);
}

double GammaDerivative::eval_raw(const Vec& x) const {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  if (r2 == 0.0) throw std::domain_error("D^beta Gamma evaluated at the origin");
  double base = std::pow(r2, (2.0 - n) / 2.0);  // |x|^{2-n}
  double s = 0.0;
  double inv = 1.0;
  int q = 0;
  for (const auto& [qq, p] : numerators) {
    while (q < qq) { inv /= r2; ++q; }
    s += p.eval(x) * base * inv;
  }
  return s;
}

namespace {

GammaDerivative compute_base(int n, const MultiIndex& beta) {
  GammaDerivative g;
  g.n = n;
  g.beta = beta;
  g.numerators.emplace(0, Polynomial::constant(n, 1.0));
  return g;
}

}  // namespace

const GammaDerivative& GammaDerivativeTable::get(const MultiIndex& beta) {
  std::lock_guard<std::mutex> lock(mu_);
  return get_locked(beta);
}

const GammaDerivative& GammaDerivativeTable::get_locked(const MultiIndex& beta) {
  auto it = cache_.find(beta);
  if (it != cache_.end()) return it->second;

  if (beta.order() == 0)
    return cache_.emplace(beta, compute_base(n_, beta)).first->second;

  // Differentiate the cached parent along the last populated axis.
  int axis = -1;
  for (int i = n_ - 1; i >= 0; --i)
    if (beta[i] > 0) { axis = i; break; }
  MultiIndex parent = beta.minus(axis);
  const GammaDerivative& pg = get_locked(parent);

  // d/dx_i [p / |x|^{n-2+2q}] = (dp/dx_i)/|x|^{n-2+2q}
  //                             - (n-2+2q) x_i p / |x|^{n-2+2(q+1)}
  GammaDerivative g;
  g.n = n_;
  g.beta = beta;
  auto acc = [&](int q, const Polynomial& p) {
    auto it2 = g.numerators.find(q);
    if (it2 == g.numerators.end()) g.numerators.emplace(q, p);
    else it2->second = it2->second + p;
  };
  Polynomial xi = Polynomial::monomial(MultiIndex::unit(n_, axis), 1.0);
  for (const auto& [q, p] : pg.numerators) {
    double s = n_ - 2.0 + 2.0 * q;
    Polynomial dp = p.partial(axis);
    if (!dp.empty()) acc(q, dp);
    acc(q + 1, xi * p * (-s));
  }
  for (auto it3 = g.numerators.begin(); it3 != g.numerators.end();)
    it3 = it3->second.empty() ? g.numerators.erase(it3) : std::next(it3);
  return cache_.emplace(beta, std::move(g)).first->second;
}

GammaDerivativeTable& gamma_table(int n) {
  static std::mutex mu;
  static std::map<int, GammaDerivativeTable*> tables;
  std::lock_guard<std::mutex> lock(mu);
  auto it = tables.find(n);
  if (it == tables.end())
    it = tables.emplace(n, new GammaDerivativeTable(n)).first;
  return *it->second;
}

double d_gamma(const MultiIndex& beta, const FundamentalSolution& fs, const Vec& x) {
  const GammaDerivative& g = gamma_table(fs.n).get(beta);
  return fs.c() * g.eval_raw(x);
}

ExpansionResult kernel_gegenbauer_expansion(const FundamentalSolution& fs,
                                            const Vec& x, double R,
                                            const Vec& yhat, int L) {
  int n = fs.n;
  double r = 0.0, dot = 0.0;
  for (int i = 0; i < n; ++i) { r += x[i] * x[i]; dot += x[i] * yhat[i]; }
  r = std::sqrt(r);
  if (r >= R) throw std::domain_error("kernel expansion requires |x| < R");
  double rho = (n - 2.0) / 2.0;
  double a = r / R;
  double t = (r > 0) ? dot / r : 0.0;

  double sum = 0.0;
  double cm2 = 0.0, cm1 = 0.0, apow = 1.0;
  for (int l = 0; l <= L; ++l) {
    double cl;
    if (l == 0) cl = 1.0;
    else if (l == 1) cl = 2.0 * rho * t;
    else cl = (2.0 * t * (l + rho - 1.0) * cm1 - (l + 2.0 * rho - 2.0) * cm2) / l;
    sum += cl * apow;
    cm2 = cm1;
    cm1 = cl;
    apow *= a;
  }
  ExpansionResult out;
  out.value = fs.c() * std::pow(R, 2.0 - n) * sum;
  out.tail_bound = (a < 1.0) ? std::pow(a, L + 1) / (1.0 - a) : INFINITY;
  return out;
}

}  // namespace npot
