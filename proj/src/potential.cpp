#include "npot/potential.hpp"

#include <cmath>
#include <random>

namespace npot {

namespace {

double fd1(const std::function<double(const Vec&)>& f, const Vec& x, int axis,
           double h) {
  auto central = [&](double step) {
    Vec xp = x, xm = x;
    xp[axis] += step;
    xm[axis] -= step;
    return (f(xp) - f(xm)) / (2.0 * step);
  };
  double d1 = central(h);
  double d2 = central(h / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace

double fd_derivative(const std::function<double(const Vec&)>& f, const Vec& x,
                     const MultiIndex& mu, double step) {
  if (mu.order() == 0) return f(x);
  int axis = -1;
  for (int i = 0; i < mu.dim(); ++i)
    if (mu[i] > 0) { axis = i; break; }
  MultiIndex rest = mu.minus(axis);
  auto inner = [&](const Vec& y) { return fd_derivative(f, y, rest, step); };
  return fd1(inner, x, axis, step);
}

Jet fd_jet(const std::function<double(const Vec&)>& f, const Vec& x, int order,
           double step) {
  Jet j;
  j.base = x;
  j.order = order;
  int n = static_cast<int>(x.size());
  for (int k = 0; k <= order; ++k) {
    // roundoff grows with the derivative order; widen the step accordingly
    double h = step * std::pow(1e12, k / (k + 2.0));
    for (const auto& mu : indices_of_order(n, k)) {
      double d = fd_derivative(f, x, mu, h);
      if (d != 0.0) j.coeffs[mu] = d / static_cast<double>(mu.factorial());
    }
  }
  return j;
}

Jet ScalarField::jet_at(const Vec& x, int order) const {
  if (jet) return jet(x, order);
  return fd_jet(eval, x, order, 1e-4 * R);
}

ScalarField ScalarField::from_polynomial(const Polynomial& p, double R) {
  ScalarField f;
  f.n = p.dim();
  f.R = R;
  f.eval = [p](const Vec& x) { return p.eval(x); };
  f.jet = [p](const Vec& x, int order) { return p.jet(x, order); };
  f.poly = p;
  return f;
}

std::function<double(const Vec&)> ScalarField::remainder_at(const Vec& x,
                                                            int k) const {
  if (poly) {
    int deg = 0;
    for (const auto& [idx, c] : poly->terms()) deg = std::max(deg, idx.order());
    // recentre at x and drop every order-<=k coefficient; the terms that
    // survive are each O(|y-x|^{k+1}), so evaluation never cancels
    Jet J = poly->jet(x, deg);
    Polynomial r(n);
    for (const auto& [mu, c] : J.coeffs)
      if (mu.order() > k) r.add_term(mu, c);
    Vec base = x;
    return [r, base](const Vec& y) {
      Vec z(base.size());
      for (std::size_t i = 0; i < base.size(); ++i) z[i] = y[i] - base[i];
      return r.eval(z);
    };
  }
  Jet T = jet_at(x, k);
  auto ev = eval;
  return [ev, T](const Vec& y) { return ev(y) - T.evaluate(y); };
}

ScalarField ScalarField::from_function(int n, double R,
                                       std::function<double(const Vec&)> fn,
                                       double fd_step_scale) {
  ScalarField f;
  f.n = n;
  f.R = R;
  f.eval = std::move(fn);
  double step = fd_step_scale * R;
  auto ev = f.eval;
  f.jet = [ev, step](const Vec& x, int order) {
    return fd_jet(ev, x, order, step);
  };
  return f;
}

double newtonian(const ScalarField& f, const Vec& x, int level) {
  FundamentalSolution fs{f.n, Convention::DELTA};
  double c = fs.c();
  int n = f.n;
  return integrate_ball_recentred(n, f.R, x, level, [&](const Vec& y, double t) {
    return c * std::pow(t, 2.0 - n) * f.eval(y);
  });
}

Polynomial newtonian_polynomial(const Polynomial& f, double R) {
  int n = f.dim();
  std::map<int, Polynomial> homog;
  for (const auto& [idx, c] : f.terms())
    homog.try_emplace(idx.order(), n).first->second.add_term(idx, c);

  Polynomial r2 = Polynomial::radius_squared(n);
  Polynomial out(n);
  for (const auto& [deg, part] : homog) {
    HarmonicDecomposition dec = harmonic_decompose(part);
    for (const auto& comp : dec.components) {
      int j = comp.power;
      int k = deg - 2 * j;
      double A = 1.0 / ((2.0 * j + 2.0) * (2.0 * j + 2.0 * k + n));
      double B = std::pow(R, 2 * j + 2) / ((2.0 * j + 2.0) * (2.0 * k + n - 2.0));
      Polynomial radial = Polynomial::constant(n, A);
      for (int p = 0; p <= j; ++p) radial = radial * r2;
      out = out + (radial - Polynomial::constant(n, B)) * comp.part;
    }
  }
  return out;
}

double n_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x,
              int level) {
  int k = beta.order() - 2;
  if (k < 0) throw std::invalid_argument("n_beta: |beta| >= 2 required");
  FundamentalSolution fs{f.n, Convention::DELTA};
  auto rem = f.remainder_at(x, k);
  gamma_table(f.n).get(beta);
  int n = f.n;
  return integrate_ball_recentred(n, f.R, x, level, [&](const Vec& y, double) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
    return d_gamma(beta, fs, d) * rem(y);
  });
}

namespace {
int sphere_level_for(int level) { return std::max(12, 6 * level); }
}

double s_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x,
              int level, int axis) {
  int k = beta.order() - 2;
  if (k < 0) throw std::invalid_argument("s_beta: |beta| >= 2 required");
  if (axis < 0)
    for (int i = 0; i < beta.dim(); ++i)
      if (beta[i] > 0) { axis = i; break; }
  if (beta[axis] == 0) throw std::invalid_argument("s_beta: beta_axis == 0");
  MultiIndex bprime = beta.minus(axis);

  FundamentalSolution fs{f.n, Convention::DELTA};
  auto rem = f.remainder_at(x, k);
  gamma_table(f.n).get(bprime);
  int n = f.n;
  QuadratureRule sph = sphere_rule(n, f.R, sphere_level_for(level));
  return integrate(sph, [&](const Vec& y) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
    return d_gamma(bprime, fs, d) * rem(y) * (y[axis] / f.R);
  });
}

namespace {

Nesting first_nesting(const MultiIndex& beta) {
  Nesting nest;
  nest.target = beta;
  MultiIndex cur = MultiIndex::zero(beta.dim());
  for (int step = 0; step < beta.order(); ++step) {
    for (int i = 0; i < beta.dim(); ++i) {
      if (cur[i] < beta[i]) {
        cur = cur.plus(i);
        nest.steps.push_back(cur);
        break;
      }
    }
  }
  return nest;
}

int step_axis(const MultiIndex& lo, const MultiIndex& hi) {
  for (int i = 0; i < lo.dim(); ++i)
    if (hi[i] != lo[i]) return i;
  throw std::logic_error("nesting step without an increment");
}

double t_beta_partial(const MultiIndex& beta, const ScalarField& f, const Vec& x,
                      const Nesting& nesting, int j_from, int const_level) {
  int k = beta.order() - 2;
  FundamentalSolution fs{f.n, Convention::DELTA};
  Jet J = f.jet_at(x, k);
  double sum = 0.0;
  for (int j = j_from; j <= k + 2; ++j) {
    const MultiIndex& bj = nesting.steps[j - 1];
    const MultiIndex& bjm1 = nesting.steps[j - 2];
    int axis = step_axis(bjm1, bj);
    MultiIndex bj_dual = beta - bj;
    for (const auto& mu : indices_of_order(f.n, j - 2)) {
      double C = residue_constants().get(bjm1, mu, axis, fs, const_level);
      if (C == 0.0) continue;
      MultiIndex nu = mu + bj_dual;
      auto it = J.coeffs.find(nu);
      if (it == J.coeffs.end()) continue;
      double dnu = it->second * static_cast<double>(nu.factorial());
      sum += C / static_cast<double>(mu.factorial()) * dnu;
    }
  }
  return sum;
}

}  // namespace

double t_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x,
              const Nesting& nesting, int const_level) {
  if (beta.order() < 2) throw std::invalid_argument("t_beta: |beta| >= 2");
  return t_beta_partial(beta, f, x, nesting, 2, const_level);
}

double t_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x) {
  return t_beta(beta, f, x, first_nesting(beta));
}

double d_beta_newtonian(const MultiIndex& beta, const ScalarField& f,
                        const Vec& x, int level) {
  int n = f.n;
  if (beta.order() == 0) return newtonian(f, x, level);
  if (beta.order() == 1) {
    FundamentalSolution fs{n, Convention::DELTA};
    gamma_table(n).get(beta);
    return integrate_ball_recentred(n, f.R, x, level, [&](const Vec& y, double) {
      Vec d(n);
      for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
      return d_gamma(beta, fs, d) * f.eval(y);
    });
  }
  return n_beta(beta, f, x, level) - t_beta(beta, f, x);
}

namespace {

/// y -> D^nu f(y), with jets shifted from f's.
ScalarField derivative_field(const ScalarField& f, const MultiIndex& nu) {
  ScalarField g;
  g.n = f.n;
  g.R = f.R;
  if (f.poly) g.poly = f.poly->derivative(nu);
  int ord = nu.order();
  ScalarField base = f;  // copy for capture
  g.eval = [base, nu, ord](const Vec& y) {
    Jet J = base.jet_at(y, ord);
    auto it = J.coeffs.find(nu);
    if (it == J.coeffs.end()) return 0.0;
    return it->second * static_cast<double>(nu.factorial());
  };
  g.jet = [base, nu, ord](const Vec& y, int order) {
    Jet Jf = base.jet_at(y, order + ord);
    Jet J;
    J.base = y;
    J.order = order;
    for (const auto& [idx, c] : Jf.coeffs) {
      MultiIndex shifted = idx;
      if (!nu.leq(idx)) continue;
      MultiIndex mu = idx - nu;
      if (mu.order() > order) continue;
      // D^mu g / mu! = D^{mu+nu} f / mu! = c * (mu+nu)! / mu!
      J.coeffs[mu] = c * static_cast<double>(idx.factorial()) /
                     static_cast<double>(mu.factorial());
    }
    return J;
  };
  return g;
}

}  // namespace

double d_beta_newtonian_recursive(const MultiIndex& beta, const ScalarField& f,
                                  const Vec& x, int level,
                                  const Nesting& nesting) {
  int k = beta.order() - 2;
  if (k < 1)
    throw std::invalid_argument("recursive route needs |beta| >= 3");

  const MultiIndex& b2 = nesting.steps[1];
  ScalarField g2 = derivative_field(f, beta - b2);
  double head = d_beta_newtonian(b2, g2, x, level);

  double boundary = 0.0;
  for (int j = 3; j <= k + 2; ++j) {
    const MultiIndex& bj = nesting.steps[j - 1];
    int axis = step_axis(nesting.steps[j - 2], bj);
    ScalarField gj = derivative_field(f, beta - bj);
    boundary += s_beta(bj, gj, x, level, axis);
  }

  double corr = t_beta_partial(beta, f, x, nesting, 3, 24);
  return head - boundary - corr;
}

double pv_derivative(const MultiIndex& beta, const ScalarField& f, const Vec& x,
                     int level) {
  int k = beta.order();
  if (k < 2) throw std::invalid_argument("pv_derivative: |beta| >= 2");
  if (!f.compact_support)
    throw std::invalid_argument("pv_derivative: field must be compactly supported in B_R");
  FundamentalSolution fs{f.n, Convention::DELTA};
  auto rem = f.remainder_at(x, k - 2);
  gamma_table(f.n).get(beta);
  int n = f.n;
  // Integrate over a ball centred at x that contains B_R. With equal ray
  // lengths the angular rule cancels the conditionally convergent part of
  // the kernel exactly (its angular factor is a pure degree-|beta|
  // spherical harmonic), which makes the value the symmetric principal
  // value; ray lengths tied to the B_R boundary would leak a
  // domain-dependent regularisation term instead. Outside B_R the field
  // vanishes, and the Taylor part integrates to zero shell by shell.
  double rad = 0.0;
  for (int i = 0; i < n; ++i) rad += x[i] * x[i];
  double rho = f.R + std::sqrt(rad);
  Vec origin(n, 0.0);
  return integrate_ball_recentred(n, rho, origin, level, [&](const Vec& z, double) {
    Vec y(n), d(n);
    for (int i = 0; i < n; ++i) {
      y[i] = x[i] + z[i];
      d[i] = -z[i];
    }
    return d_gamma(beta, fs, d) * rem(y);
  });
}

NormEstimate holder_norms(const ScalarField& f, double alpha, int k,
                          int sample_count, unsigned seed) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("holder_norms: alpha in (0,1)");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int n = f.n;
  auto sample_point = [&]() {
    Vec x(n);
    while (true) {
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) { x[i] = uni(rng) * 0.8 * f.R; r2 += x[i] * x[i]; }
      if (r2 <= 0.64 * f.R * f.R) return x;
    }
  };

  NormEstimate est;
  std::vector<Vec> pts;
  for (int s = 0; s < sample_count; ++s) {
    Vec x = sample_point();
    est.sup_norm = std::max(est.sup_norm, std::abs(f.eval(x)));
    pts.push_back(std::move(x));
  }
  for (int s = 0; s + 1 < sample_count; ++s) {
    const Vec& a = pts[s];
    const Vec& b = pts[s + 1];
    double dist = 0.0, diff = std::abs(f.eval(a) - f.eval(b));
    for (int i = 0; i < n; ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
    dist = std::sqrt(dist);
    if (dist > 1e-12)
      est.holder_seminorm = std::max(est.holder_seminorm,
                                     diff / std::pow(dist, alpha));
  }
  est.composite = est.sup_norm + std::pow(f.R, alpha) * est.holder_seminorm;

  if (k == 0) {
    est.order_k = est.composite;
    return est;
  }

  // ||f||_alpha^{(k)}: sup over |mu|=k of ||D^mu f||_alpha, on a thinner sample.
  int m = std::max(8, sample_count / 8);
  for (const auto& mu : indices_of_order(n, k)) {
    auto dmu = [&](const Vec& y) {
      Jet J = f.jet_at(y, k);
      auto it = J.coeffs.find(mu);
      return it == J.coeffs.end()
                 ? 0.0
                 : it->second * static_cast<double>(mu.factorial());
    };
    double sup = 0.0, hold = 0.0;
    std::vector<Vec> q;
    for (int s = 0; s < m; ++s) q.push_back(sample_point());
    std::vector<double> vals(m);
    for (int s = 0; s < m; ++s) {
      vals[s] = dmu(q[s]);
      sup = std::max(sup, std::abs(vals[s]));
    }
    for (int s = 0; s + 1 < m; ++s) {
      double dist = 0.0;
      for (int i = 0; i < n; ++i) dist += (q[s][i] - q[s + 1][i]) * (q[s][i] - q[s + 1][i]);
      dist = std::sqrt(dist);
      if (dist > 1e-12)
        hold = std::max(hold, std::abs(vals[s] - vals[s + 1]) / std::pow(dist, alpha));
    }
    est.order_k = std::max(est.order_k, sup + std::pow(f.R, alpha) * hold);
  }
  return est;
}

}  // namespace npot
