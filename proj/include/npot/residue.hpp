#pragma once

#include <map>
#include <mutex>
#include <tuple>

#include "npot/polynomial.hpp"
#include "npot/quadrature.hpp"
#include "npot/specfun.hpp"

namespace npot {

/// Boundary moment I_{B_R}(beta, mu, j)(x)
///   = int_{dB_R} D^beta Gamma(x-y) (y-x)^mu nu_j dsigma_y.
/// The axis j is 0-based. Constant in x when |beta| = |mu|+1 and zero when
/// |beta| >= |mu|+2.
double boundary_moment(const MultiIndex& beta, const MultiIndex& mu, int j,
                       double R, const Vec& x, const FundamentalSolution& fs,
                       int level);

struct ResidueProjection {
  Polynomial fitted;     // degree-k polynomial through the sampled integral
  double fit_residual;   // max |sample - fit| / max |sample|
};

/// Sample x -> int_{dB_R} Gamma(x-y) f(y) dsigma_y at random interior points
/// and least-squares fit a polynomial of the same degree as f.
ResidueProjection residue_projection(const Polynomial& f, double R,
                                     const FundamentalSolution& fs,
                                     int sample_count, int level,
                                     unsigned seed = 1234);

/// int_{B_R \ B_eps(z)} D^beta Gamma(x-y) f(y) dy for x in B_eps(z);
/// vanishes when |beta| >= deg f + 2.
double annulus_vanishing(const MultiIndex& beta, const Polynomial& f,
                         const Vec& z, double eps, double R, const Vec& x,
                         const FundamentalSolution& fs, int level);

/// Coefficient of x_1 in I_{B_R}(0,0,1) for the RAW kernel:
/// 4 pi^{n/2} / (n Gamma((n-2)/2)). R-invariant (verified numerically).
double closed_form_moment(int n, double R = 1.0);

struct ConstantKey {
  int n;
  MultiIndex beta;
  MultiIndex mu;
  int j;
  Convention convention;
  bool operator<(const ConstantKey& o) const {
    return std::tie(n, beta, mu, j, convention) <
           std::tie(o.n, o.beta, o.mu, o.j, o.convention);
  }
};

/// Write-once cache of the residue constants C(beta, mu, j) (|beta| = |mu|+1),
/// computed numerically at R=1 with a spread check over sampled x.
class ResidueConstantCache {
public:
  double get(const MultiIndex& beta, const MultiIndex& mu, int j,
             const FundamentalSolution& fs, int level = 24);
  std::map<ConstantKey, double> snapshot() const;

private:
  mutable std::mutex mu_;
  std::map<ConstantKey, double> cache_;
};

ResidueConstantCache& residue_constants();

}  // namespace npot
