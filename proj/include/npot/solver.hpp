#pragma once

#include <chrono>
#include <utility>

#include "npot/potential.hpp"
#include "npot/rhs_dsl.hpp"

namespace npot {

struct SystemSpec {
  int n = 3;
  int m = 1;
  int components = 1;
  double alpha = 0.5;
  std::vector<std::string> rhs_src;
  std::vector<dsl::Expr> rhs;
  bool autonomous = false;
  int dependence = -1;  // max derivative order referenced

  dsl::SymbolTable table() const { return {n, components, 2 * m}; }

  /// Parses and validates the rhs strings; throws on undeclared variables,
  /// dependence order > 2m, or an autonomous flag contradicting the sources.
  static SystemSpec make(int n, int m, int components, double alpha,
                         std::vector<std::string> rhs, bool autonomous);

  /// All (component, beta) derivative variables referenced by the rhs.
  std::vector<std::pair<int, MultiIndex>> referenced_derivatives() const;
};

struct SolveConfig {
  double R = 0.5;
  double gamma = 0.5;
  std::vector<Polynomial> h;                        // per component
  std::vector<std::map<MultiIndex, double>> jets;   // optional, Taylor coefficients
  int max_iters = 30;
  double tol = 1e-6;
  int level = 4;        // quadrature level
  int grid_points = 17; // Cartesian nodes per axis over [-R, R]
  int fit_degree = 10;  // polynomial degree of the evaluator's RHS fit
};

/// Uniform Cartesian grid over [-R,R]^3 with tensor cubic B-spline
/// interpolation (not-a-knot ends). C^2 smooth and reproduces degree-3
/// polynomials exactly; the smoothness matters because iterated finite
/// differences of integrals over the interpolant see its second
/// derivatives.
class Grid3 {
public:
  Grid3(double R, int npts);

  double R() const { return R_; }
  int npts() const { return npts_; }
  double spacing() const { return h_; }
  Vec node(int i, int j, int k) const;
  double at(int i, int j, int k) const { return vals_[(i * npts_ + j) * npts_ + k]; }
  double& at(int i, int j, int k) {
    dirty_ = true;
    return vals_[(i * npts_ + j) * npts_ + k];
  }

  double interp(const Vec& x) const;
  Jet jet(const Vec& x, int order) const;  // order <= 2

private:
  void refresh() const;  // recompute spline control points

  double R_;
  int npts_;
  double h_;
  std::vector<double> vals_;
  mutable std::vector<double> ctrl_;  // (npts+2)^3 control points
  mutable bool dirty_ = true;
};

/// Discrete iterate: per-component values plus value grids for every
/// derivative variable the system references.
struct GridField {
  int n = 3;
  double R = 0.5;
  std::vector<Grid3> comp;
  std::map<std::pair<int, MultiIndex>, Grid3> deriv;  // key: (component, beta)

  static GridField zero(const SystemSpec& sys, const SolveConfig& cfg);
  ScalarField field(int c) const;
  double sup_diff(const GridField& o) const;  // over value grids
};

struct SolutionReport {
  bool converged = false;
  bool diverged = false;
  std::string failure;
  int iterations = 0;
  std::vector<double> diffs;      // successive sup-norm differences
  std::vector<double> ratios;     // diffs[i+1]/diffs[i]
  double residual_rel = 0.0;      // finite-difference PDE residual
  std::map<std::string, double> jets_at_zero;  // "c|beta" -> D^beta u_c(0), FD
  double delta_estimate = 0.0;
  double eta_estimate = 0.0;
  double sup_norm = 0.0;
  double wall_seconds = 0.0;
};

struct ContractionEstimate {
  std::map<int, double> A, Q, L;  // -1 <= j <= 2m
  double a0 = 0.0;                // |a(0)|
  bool p2m_independent = true;
  double delta = 0.0;
  double eta = 0.0;
};

/// Polynomial view of a converged iterate: the final RHS samples are
/// least-squares fitted by a polynomial over the ball, pushed through the
/// closed-form Newtonian m times, and jet-truncated exactly. Finite
/// differences of the result carry no quadrature or interpolation noise,
/// so iterated FD Laplacians of u are meaningful. Valid for |x| <= R.
struct SolutionEvaluator {
  int n = 3;
  int m = 1;
  double R = 0.5;
  std::vector<Polynomial> u;  // per component: h + N^m(fit) - jet terms
  double fit_rms = 0.0;       // rms misfit of the RHS sample fit

  double eval(int c, const Vec& x) const { return u[c].eval(x); }
};

/// omega^{(l)}(f) = N^l(a(., f, ...)) sampled on the grid (values only).
GridField omega(int l, const GridField& f, const SystemSpec& sys,
                const SolveConfig& cfg);

/// theta(f): omega^{(m)}(f) minus its order-(2m-1) jet at 0 and the
/// Lambda-indexed degree-2m jet terms; carries derivative grids for the
/// referenced d-variables.
GridField theta(const GridField& f, const SystemSpec& sys,
                const SolveConfig& cfg);

std::pair<GridField, SolutionReport> picard_solve(const SystemSpec& sys,
                                                  const SolveConfig& cfg);

/// Continuous evaluator for the RHS samples of the given iterate.
SolutionEvaluator make_evaluator(const GridField& f, const SystemSpec& sys,
                                 const SolveConfig& cfg);

ContractionEstimate estimate_contraction(const SystemSpec& sys, double R,
                                         double gamma, int sample_count,
                                         unsigned seed = 7);

enum class SelectMode { SMALL_BALL, AUTONOMOUS_LARGE_R };

struct ParamSelection {
  bool ok = false;
  double R = 0.0;
  double gamma = 0.0;
  int halvings = 0;
  std::string failure;
  ContractionEstimate estimate;
};

ParamSelection select_parameters(const SystemSpec& sys, SelectMode mode,
                                 double R0 = 1.0, double gamma0 = 1.0,
                                 int sample_count = 2000);

/// u = u~ + T_{2m-1}: substitute every u/derivative variable by itself plus
/// the matching derivative of T (coefficients c_beta are Taylor coefficients).
SystemSpec initial_value_shift(const SystemSpec& sys,
                               const std::vector<std::map<MultiIndex, double>>& jets);

}  // namespace npot
