#pragma once

#include <functional>
#include <optional>

#include "npot/residue.hpp"

namespace npot {

/// Scalar field on the closed ball B_R with an attached jet provider.
/// The default provider uses Richardson-extrapolated central differences;
/// polynomial-backed fields carry exact jets.
struct ScalarField {
  int n = 3;
  double R = 1.0;
  std::function<double(const Vec&)> eval;
  std::function<Jet(const Vec&, int)> jet;  // may be empty; then FD default
  bool compact_support = false;             // supp f contained in B_R
  std::optional<Polynomial> poly;           // set for polynomial-backed fields

  Jet jet_at(const Vec& x, int order) const;

  /// y -> f(y) - T^x_k(f)(y). For polynomial fields the subtraction happens
  /// in coefficient space, so the value is free of cancellation even where
  /// the remainder is many orders smaller than f; the singular kernels
  /// multiply it by |y-x|^{-k-n+2} and would amplify roundoff otherwise.
  std::function<double(const Vec&)> remainder_at(const Vec& x, int k) const;

  static ScalarField from_polynomial(const Polynomial& p, double R);
  static ScalarField from_function(int n, double R,
                                   std::function<double(const Vec&)> f,
                                   double fd_step_scale = 1e-4);
};

/// D^mu f(x) by Richardson-extrapolated central differences (order <= 4).
double fd_derivative(const std::function<double(const Vec&)>& f, const Vec& x,
                     const MultiIndex& mu, double step);

Jet fd_jet(const std::function<double(const Vec&)>& f, const Vec& x, int order,
           double step);

struct NormEstimate {
  double sup_norm = 0.0;       // ||f||
  double holder_seminorm = 0.0;  // H_alpha[f]
  double composite = 0.0;        // ||f|| + R^alpha H_alpha[f]
  double order_k = 0.0;          // ||f||_alpha^{(k)} = sup_{|b|=k} ||D^b f||_alpha
};

/// Newtonian potential N(f)(x) = int_{B_R} Gamma(x-y) f(y) dy (DELTA kernel).
double newtonian(const ScalarField& f, const Vec& x, int level);

/// Closed form of N(f) inside B_R for polynomial f. Each solid-harmonic
/// piece |y|^{2j} h_k(y) integrates to
///   (|x|^{2j+2} / ((2j+2)(2j+2k+n)) - R^{2j+2} / ((2j+2)(2k+n-2))) h_k(x),
/// obtained by matching the interior particular solution to the decaying
/// exterior harmonic across the sphere. Valid for |x| <= R only.
Polynomial newtonian_polynomial(const Polynomial& f, double R);

/// N_beta(f)(x) = int_{B_R} D^beta Gamma(x-y) (f - T^x_k f)(y) dy, |beta| = k+2.
double n_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x,
              int level);

/// S_beta(f)(x) = int_{dB_R} D^{beta'} Gamma(x-y) (f - T^x_k f)(y) nu_j dsigma,
/// with D^beta = d_j D^{beta'}; j defaults to the first populated axis.
double s_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x,
              int level, int axis = -1);

/// Correction sum over a nesting: sum_{j=2}^{k+2} sum_{|mu|=j-2}
/// C(beta^{(j-1)}, mu, i_j)/mu! D^{mu+beta^{(j)'}} f(x).
double t_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x,
              const Nesting& nesting, int const_level = 24);
double t_beta(const MultiIndex& beta, const ScalarField& f, const Vec& x);

/// D^beta N(f)(x). |beta| <= 1: direct integral; |beta| >= 2: N_beta - T_beta.
double d_beta_newtonian(const MultiIndex& beta, const ScalarField& f,
                        const Vec& x, int level);

/// Same value assembled by the boundary-operator recursion
/// D^{beta^(2)} N(D^{beta^(2)'} f) - sum_{j>=3} S_{beta^(j)}(D^{beta^(j)'} f)
/// - (T_beta minus its j=2 term). Kept as the independent algebraic route.
double d_beta_newtonian_recursive(const MultiIndex& beta, const ScalarField& f,
                                  const Vec& x, int level,
                                  const Nesting& nesting);

/// Principal-value derivative, Taylor order k-2 subtraction; requires
/// compactly supported f when x is inside the support.
double pv_derivative(const MultiIndex& beta, const ScalarField& f, const Vec& x,
                     int level);

/// Monte-Carlo Hoelder norm estimates over sample_count points / pairs,
/// restricted to |x| <= 0.8 R.
NormEstimate holder_norms(const ScalarField& f, double alpha, int k,
                          int sample_count, unsigned seed = 99);

}  // namespace npot
