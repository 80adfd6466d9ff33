#pragma once

#include <functional>
#include <string>
#include <vector>

#include "npot/multiindex.hpp"

namespace npot {

/// Execution policy for quadrature reductions. Serial is the reference
/// implementation; Parallel runs the same reduction under OpenMP.
enum class Exec { Serial, Parallel };

Exec default_exec();
void set_default_exec(Exec e);

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 1-D Gauss rules on [-1,1] (weights include the Jacobi factor
/// (1-t)^a (1+t)^b when a or b is nonzero).
void gauss_legendre(int npts, std::vector<double>& t, std::vector<double>& w);
void gauss_jacobi(int npts, double a, double b, std::vector<double>& t,
                  std::vector<double>& w);

struct QuadratureRule {
  enum class Domain { Sphere, Ball, Annulus };
  Domain domain;
  int n = 3;
  double R = 1.0;
  int level = 0;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  double weight_sum() const;
  void write_csv(const std::string& path) const;
};

/// Tensor rule on the sphere |y| = R, n in {3,4,5}: Gauss(-Jacobi) in each
/// polar angle, trapezoid in azimuth. Exact for spherical polynomials of
/// degree up to ~2*level - 1.
QuadratureRule sphere_rule(int n, double R, int level);

/// Radial Gauss-Legendre (weight r^{n-1}) x sphere_rule on the ball |y| <= R.
QuadratureRule ball_rule(int n, double R, int level);

double integrate(const QuadratureRule& rule,
                 const std::function<double(const Vec&)>& f);
double integrate(const QuadratureRule& rule,
                 const std::function<double(const Vec&)>& f, Exec exec);

/// Integrate F over B_R in polar coordinates recentred at x (which may lie
/// outside the ball; rays missing the ball contribute nothing). The radial
/// mesh on each ray is geometrically graded toward the singular point x with
/// ratio 0.5 and depth tied to level. F receives the point y and t = |y - x|.
double integrate_ball_recentred(int n, double R, const Vec& x, int level,
                                const std::function<double(const Vec&, double)>& F,
                                Exec exec = default_exec());

/// Same over the annulus B_R \ B_eps(z), for x inside B_eps(z); radial mesh
/// graded toward the inner sphere.
double integrate_annulus_recentred(int n, double R, const Vec& z, double eps,
                                   const Vec& x, int level,
                                   const std::function<double(const Vec&, double)>& F,
                                   Exec exec = default_exec());

/// Integral of f_reg(y) |x-y|^{-s} over B_R; requires s < n at the decay
/// order of f_reg at x.
double singular_ball_integrate(const std::function<double(const Vec&)>& f_reg,
                               double s, const Vec& x, int n, double R, int level);

/// Level-refinement variant; throws QuadratureError when two successive
/// levels differ by more than tol.
double singular_ball_integrate_checked(
    const std::function<double(const Vec&)>& f_reg, double s, const Vec& x,
    int n, double R, int level, double tol);

/// Arc-length integral of (1-|w|^2)^{alpha-1} along the shorter segment of
/// the circle through z and z' orthogonal to the unit circle (straight
/// segment in the degenerate collinear-through-origin case).
double geodesic_arc_integral(double z1, double z2, double w1, double w2,
                             double alpha, int npts = 200);

}  // namespace npot
