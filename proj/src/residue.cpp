#include "npot/residue.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace npot {

double boundary_moment(const MultiIndex& beta, const MultiIndex& mu, int j,
                       double R, const Vec& x, const FundamentalSolution& fs,
                       int level) {
  int n = fs.n;
  double x2 = 0.0;
  for (int i = 0; i < n; ++i) x2 += x[i] * x[i];
  if (x2 >= R * R)
    throw std::invalid_argument("boundary_moment: x must lie inside B_R");

  QuadratureRule sph = sphere_rule(n, R, level);
  // warm the derivative cache before the parallel reduction
  gamma_table(n).get(beta);
  return integrate(sph, [&](const Vec& y) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
    return d_gamma(beta, fs, d) * mu.power(y, x) * (y[j] / R);
  });
}

ResidueProjection residue_projection(const Polynomial& f, double R,
                                     const FundamentalSolution& fs,
                                     int sample_count, int level,
                                     unsigned seed) {
  int n = fs.n;
  int k = std::max(f.degree(), 0);
  if (k > 6) throw std::invalid_argument("residue_projection: degree <= 6");

  std::vector<MultiIndex> basis;
  for (int d = 0; d <= k; ++d)
    for (const auto& m : indices_of_order(n, d)) basis.push_back(m);

  int min_samples = 2 * static_cast<int>(basis.size());
  int ns = std::max(sample_count, min_samples);

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Vec> xs;
  while (static_cast<int>(xs.size()) < ns) {
    Vec x(n);
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) { x[i] = uni(rng) * 0.6 * R; r2 += x[i] * x[i]; }
    if (r2 <= 0.36 * R * R) xs.push_back(std::move(x));
  }

  QuadratureRule sph = sphere_rule(n, R, level);
  Eigen::VectorXd vals(ns);
  for (int s = 0; s < ns; ++s) {
    const Vec& x = xs[s];
    vals[s] = integrate(sph, [&](const Vec& y) {
      Vec d(n);
      for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
      return fs.gamma_at(d) * f.eval(y);
    });
  }

  Eigen::MatrixXd A(ns, basis.size());
  for (int s = 0; s < ns; ++s)
    for (size_t b = 0; b < basis.size(); ++b)
      A(s, b) = basis[b].power(xs[s]);

  Eigen::VectorXd coef =
      A.colPivHouseholderQr().solve(vals);
  double cond_check = (A * coef - vals).norm();
  double scale = vals.cwiseAbs().maxCoeff();
  if (scale == 0.0) scale = 1.0;

  ResidueProjection out{Polynomial(n), (A * coef - vals).cwiseAbs().maxCoeff() / scale};
  (void)cond_check;
  for (size_t b = 0; b < basis.size(); ++b)
    if (std::abs(coef[b]) > 1e-300) out.fitted.add_term(basis[b], coef[b]);
  return out;
}

double annulus_vanishing(const MultiIndex& beta, const Polynomial& f,
                         const Vec& z, double eps, double R, const Vec& x,
                         const FundamentalSolution& fs, int level) {
  int n = fs.n;
  gamma_table(n).get(beta);
  return integrate_annulus_recentred(
      n, R, z, eps, x, level, [&](const Vec& y, double) {
        Vec d(n);
        for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
        return d_gamma(beta, fs, d) * f.eval(y);
      });
}

double closed_form_moment(int n, double R) {
  (void)R;  // the x_1 coefficient does not scale with R
  return 4.0 * std::pow(M_PI, n / 2.0) / (n * gamma_fn((n - 2.0) / 2.0));
}

double ResidueConstantCache::get(const MultiIndex& beta, const MultiIndex& mu,
                                 int j, const FundamentalSolution& fs,
                                 int level) {
  if (beta.order() != mu.order() + 1)
    throw std::invalid_argument("residue constant requires |beta| = |mu|+1");
  ConstantKey key{fs.n, beta, mu, j, fs.convention};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  // Sample a few interior points; the value must be x-independent.
  std::mt19937 rng(20240801u + beta.order());
  std::uniform_real_distribution<double> uni(-0.2, 0.2);
  double first = 0.0, lo = 0.0, hi = 0.0;
  const int samples = 4;
  for (int s = 0; s < samples; ++s) {
    Vec x(fs.n, 0.0);
    if (s > 0)
      for (int i = 0; i < fs.n; ++i) x[i] = uni(rng);
    double v = boundary_moment(beta, mu, j, 1.0, x, fs, level);
    if (s == 0) { first = lo = hi = v; }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo > 1e-6 * (1.0 + std::abs(first)))
    throw std::runtime_error("residue constant not x-independent: spread " +
                             std::to_string(hi - lo));
  std::lock_guard<std::mutex> lock(mu_);
  cache_[key] = first;
  return first;
}

std::map<ConstantKey, double> ResidueConstantCache::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_;
}

ResidueConstantCache& residue_constants() {
  static ResidueConstantCache cache;
  return cache;
}

}  // namespace npot
