#include "npot/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace npot {

namespace {
Exec g_exec = Exec::Parallel;
}

Exec default_exec() { return g_exec; }
void set_default_exec(Exec e) { g_exec = e; }

void gauss_legendre(int npts, std::vector<double>& t, std::vector<double>& w) {
  gauss_jacobi(npts, 0.0, 0.0, t, w);
}

void gauss_jacobi(int npts, double a, double b, std::vector<double>& t,
                  std::vector<double>& w) {
  const gsl_integration_fixed_type* type =
      (a == 0.0 && b == 0.0) ? gsl_integration_fixed_legendre
                             : gsl_integration_fixed_jacobi;
  gsl_integration_fixed_workspace* ws =
      gsl_integration_fixed_alloc(type, npts, -1.0, 1.0, a, b);
  if (!ws) throw QuadratureError("gsl_integration_fixed_alloc failed");
  t.assign(ws->x, ws->x + ws->n);
  w.assign(ws->weights, ws->weights + ws->n);
  gsl_integration_fixed_free(ws);
}

double QuadratureRule::weight_sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void QuadratureRule::write_csv(const std::string& path) const {
  std::ofstream os(path);
  for (size_t i = 0; i < nodes.size(); ++i) {
    for (int j = 0; j < n; ++j) os << nodes[i][j] << ",";
    os << weights[i] << "\n";
  }
}

QuadratureRule sphere_rule(int n, double R, int level) {
  if (n < 3 || n > 5) throw std::invalid_argument("sphere_rule: n must be 3..5");
  if (level < 1) throw std::invalid_argument("sphere_rule: level >= 1");

  // Polar angles theta_1..theta_{n-2} with weight sin^{n-1-i}(theta_i)
  // handled as Gauss-Jacobi in t = cos(theta); azimuth by trapezoid.
  int npolar = n - 2;
  std::vector<std::vector<double>> ts(npolar), ws(npolar);
  for (int i = 0; i < npolar; ++i) {
    double exponent = (n - 2 - i - 1) / 2.0 + 0.5;  // (n-2-i)/2
    double jac = (n - 2 - i) / 2.0 - 0.5;           // Jacobi alpha = beta
    (void)exponent;
    gauss_jacobi(level, jac, jac, ts[i], ws[i]);
  }
  int naz = 2 * level;

  QuadratureRule rule;
  rule.domain = QuadratureRule::Domain::Sphere;
  rule.n = n;
  rule.R = R;
  rule.level = level;

  std::vector<int> idx(npolar, 0);
  double Rpow = std::pow(R, n - 1);
  while (true) {
    double wpol = 1.0;
    std::vector<double> cosv(npolar), sinv(npolar);
    for (int i = 0; i < npolar; ++i) {
      cosv[i] = ts[i][idx[i]];
      sinv[i] = std::sqrt(std::max(0.0, 1.0 - cosv[i] * cosv[i]));
      wpol *= ws[i][idx[i]];
    }
    for (int k = 0; k < naz; ++k) {
      double phi = 2.0 * M_PI * k / naz;
      Vec y(n);
      double prod = 1.0;
      for (int i = 0; i < npolar; ++i) {
        y[i] = R * prod * cosv[i];
        prod *= sinv[i];
      }
      y[n - 2] = R * prod * std::cos(phi);
      y[n - 1] = R * prod * std::sin(phi);
      rule.nodes.push_back(std::move(y));
      rule.weights.push_back(Rpow * wpol * 2.0 * M_PI / naz);
    }
    int i = npolar - 1;
    while (i >= 0 && ++idx[i] == static_cast<int>(ts[i].size())) idx[i--] = 0;
    if (i < 0) break;
  }
  return rule;
}

QuadratureRule ball_rule(int n, double R, int level) {
  QuadratureRule sph = sphere_rule(n, 1.0, level);
  std::vector<double> t, w;
  gauss_legendre(level, t, w);

  QuadratureRule rule;
  rule.domain = QuadratureRule::Domain::Ball;
  rule.n = n;
  rule.R = R;
  rule.level = level;
  for (size_t ir = 0; ir < t.size(); ++ir) {
    double r = 0.5 * R * (t[ir] + 1.0);
    double wr = 0.5 * R * w[ir] * std::pow(r, n - 1);
    for (size_t is = 0; is < sph.nodes.size(); ++is) {
      Vec y(n);
      for (int j = 0; j < n; ++j) y[j] = r * sph.nodes[is][j];
      rule.nodes.push_back(std::move(y));
      rule.weights.push_back(wr * sph.weights[is]);
    }
  }
  return rule;
}

double integrate(const QuadratureRule& rule,
                 const std::function<double(const Vec&)>& f) {
  return integrate(rule, f, g_exec);
}

double integrate(const QuadratureRule& rule,
                 const std::function<double(const Vec&)>& f, Exec exec) {
  const auto N = static_cast<long>(rule.nodes.size());
  double sum = 0.0;
  if (exec == Exec::Parallel) {
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long i = 0; i < N; ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  } else {
    for (long i = 0; i < N; ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  }
  return sum;
}

namespace {

struct RaySegment {
  double t0, t1;  // graded from t0
};

/// GL nodes for one graded segment [a,b] split geometrically toward a.
void graded_segment(double a, double b, int depth, const std::vector<double>& t,
                    const std::vector<double>& w, std::vector<double>& rt,
                    std::vector<double>& rw) {
  double len = b - a;
  if (len <= 0) return;
  // breakpoints a + len*2^{-j}, j = depth..0; innermost cell [a, a+len*2^{-depth}]
  double lo = a;
  double hi = a + len * std::ldexp(1.0, -depth);
  for (int j = depth; j >= 0; --j) {
    for (size_t i = 0; i < t.size(); ++i) {
      rt.push_back(0.5 * (hi - lo) * (t[i] + 1.0) + lo);
      rw.push_back(0.5 * (hi - lo) * w[i]);
    }
    lo = hi;
    hi = a + len * std::ldexp(1.0, -(j - 1));
  }
}

struct PolarGrid {
  QuadratureRule dirs;  // unit sphere directions
  std::vector<double> glt, glw;
  int depth;
};

PolarGrid make_polar_grid(int n, int level) {
  PolarGrid g;
  g.dirs = sphere_rule(n, 1.0, std::max(2, level));
  // points per radial panel must grow with the level, or the outermost
  // panel (half of each ray) pins the radial error regardless of level
  int glpts = std::max(6, level);
  gauss_legendre(glpts, g.glt, g.glw);
  // grading below ~2^-20 of the ray adds nothing for the kernels used here
  // but walks quadrature nodes into roundoff territory
  g.depth = std::min(level + 4, 20);
  return g;
}

}  // namespace

double integrate_ball_recentred(int n, double R, const Vec& x, int level,
                                const std::function<double(const Vec&, double)>& F,
                                Exec exec) {
  PolarGrid g = make_polar_grid(n, level);
  double x2 = 0.0;
  for (int i = 0; i < n; ++i) x2 += x[i] * x[i];

  const auto ND = static_cast<long>(g.dirs.nodes.size());
  double sum = 0.0;

  auto ray = [&](long d) {
    const Vec& omega = g.dirs.nodes[d];
    double b = 0.0;
    for (int i = 0; i < n; ++i) b += x[i] * omega[i];
    double disc = b * b - (x2 - R * R);
    if (disc <= 0.0) return 0.0;
    double sq = std::sqrt(disc);
    double tlo = std::max(0.0, -b - sq);
    double thi = -b + sq;
    if (thi <= tlo) return 0.0;

    std::vector<double> rt, rw;
    graded_segment(tlo, thi, g.depth, g.glt, g.glw, rt, rw);
    // below this step size x + t*omega rounds back to x and recentred
    // kernels would see a zero offset; the skipped sliver is O(eps) of the ray
    double tfloor = 8.0 * std::numeric_limits<double>::epsilon() * std::sqrt(x2);
    double s = 0.0;
    Vec y(n);
    for (size_t i = 0; i < rt.size(); ++i) {
      double t = rt[i];
      if (t < tfloor) continue;
      for (int j = 0; j < n; ++j) y[j] = x[j] + t * omega[j];
      s += rw[i] * std::pow(t, n - 1) * F(y, t);
    }
    return g.dirs.weights[d] * s;
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long d = 0; d < ND; ++d) sum += ray(d);
  } else {
    for (long d = 0; d < ND; ++d) sum += ray(d);
  }
  return sum;
}

double integrate_annulus_recentred(int n, double R, const Vec& z, double eps,
                                   const Vec& x, int level,
                                   const std::function<double(const Vec&, double)>& F,
                                   Exec exec) {
  double zx2 = 0.0, x2 = 0.0;
  for (int i = 0; i < n; ++i) {
    zx2 += (z[i] - x[i]) * (z[i] - x[i]);
    x2 += x[i] * x[i];
  }
  if (zx2 >= eps * eps)
    throw std::invalid_argument("annulus integral requires x inside B_eps(z)");
  double rad_z = 0.0;
  for (int i = 0; i < n; ++i) rad_z += z[i] * z[i];
  if (std::sqrt(rad_z) + eps > R)
    throw std::invalid_argument("annulus integral requires B_eps(z) inside B_R");

  PolarGrid g = make_polar_grid(n, level);
  const auto ND = static_cast<long>(g.dirs.nodes.size());
  double sum = 0.0;

  auto ray = [&](long d) {
    const Vec& omega = g.dirs.nodes[d];
    double bi = 0.0, bo = 0.0;
    for (int i = 0; i < n; ++i) {
      bi += (z[i] - x[i]) * omega[i];
      bo += x[i] * omega[i];
    }
    // inner sphere |x + t w - z| = eps: t^2 - 2 bi t + (zx2 - eps^2) = 0
    double tin = bi + std::sqrt(bi * bi - (zx2 - eps * eps));
    double tout = -bo + std::sqrt(bo * bo - (x2 - R * R));
    if (tout <= tin) return 0.0;

    std::vector<double> rt, rw;
    graded_segment(tin, tout, g.depth, g.glt, g.glw, rt, rw);
    double s = 0.0;
    Vec y(n);
    for (size_t i = 0; i < rt.size(); ++i) {
      double t = rt[i];
      for (int j = 0; j < n; ++j) y[j] = x[j] + t * omega[j];
      s += rw[i] * std::pow(t, n - 1) * F(y, t);
    }
    return g.dirs.weights[d] * s;
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long d = 0; d < ND; ++d) sum += ray(d);
  } else {
    for (long d = 0; d < ND; ++d) sum += ray(d);
  }
  return sum;
}

double singular_ball_integrate(const std::function<double(const Vec&)>& f_reg,
                               double s, const Vec& x, int n, double R,
                               int level) {
  return integrate_ball_recentred(
      n, R, x, level,
      [&](const Vec& y, double t) { return f_reg(y) * std::pow(t, -s); });
}

double singular_ball_integrate_checked(
    const std::function<double(const Vec&)>& f_reg, double s, const Vec& x,
    int n, double R, int level, double tol) {
  double coarse = singular_ball_integrate(f_reg, s, x, n, R, level - 1);
  double fine = singular_ball_integrate(f_reg, s, x, n, R, level);
  if (std::abs(fine - coarse) > tol)
    throw QuadratureError("singular integral did not converge: |diff|=" +
                          std::to_string(std::abs(fine - coarse)));
  return fine;
}

double geodesic_arc_integral(double z1, double z2, double w1, double w2,
                             double alpha, int npts) {
  // Circle through z, w orthogonal to the unit circle: center c with
  // 2 c.z = |z|^2 + 1 and 2 c.w = |w|^2 + 1.
  double det = z1 * w2 - z2 * w1;
  std::vector<double> t, wq;
  gauss_legendre(npts, t, wq);

  auto segment = [&]() {
    // straight chord fallback (collinear with the origin)
    double dx = w1 - z1, dy = w2 - z2;
    double len = std::hypot(dx, dy);
    double s = 0.0;
    for (int i = 0; i < npts; ++i) {
      double u = 0.5 * (t[i] + 1.0);
      double px = z1 + u * dx, py = z2 + u * dy;
      double r2 = px * px + py * py;
      s += 0.5 * wq[i] * len * std::pow(1.0 - r2, alpha - 1.0);
    }
    return s;
  };

  if (std::abs(det) < 1e-12) return segment();

  double rz = (z1 * z1 + z2 * z2 + 1.0) / 2.0;
  double rw = (w1 * w1 + w2 * w2 + 1.0) / 2.0;
  double cx = (rz * w2 - rw * z2) / det;
  double cy = (rw * z1 - rz * w1) / det;
  double rho2 = cx * cx + cy * cy - 1.0;
  if (rho2 <= 0) return segment();
  double rho = std::sqrt(rho2);

  double a0 = std::atan2(z2 - cy, z1 - cx);
  double a1 = std::atan2(w2 - cy, w1 - cx);
  double da = a1 - a0;
  while (da > M_PI) da -= 2.0 * M_PI;
  while (da < -M_PI) da += 2.0 * M_PI;

  double s = 0.0;
  for (int i = 0; i < npts; ++i) {
    double a = a0 + 0.5 * (t[i] + 1.0) * da;
    double px = cx + rho * std::cos(a);
    double py = cy + rho * std::sin(a);
    double r2 = px * px + py * py;
    s += 0.5 * wq[i] * std::abs(da) * rho * std::pow(1.0 - r2, alpha - 1.0);
  }
  return s;
}

}  // namespace npot
