#pragma once

#include <map>
#include <mutex>
#include <optional>

#include "npot/polynomial.hpp"

namespace npot {

/// Gamma function by Lanczos approximation (g=7, 9 coefficients).
double gamma_fn(double x);

double unit_ball_volume(int n);    // alpha_n
double unit_sphere_area(int n);    // s_n = n * alpha_n

/// Gegenbauer polynomial C_l^{(rho)}(t) by the three-term recurrence.
double gegenbauer(int l, double rho, double t);

/// Weighted L2 norm integral of C_l^{(rho)}:
/// pi 2^{1-2 rho} Gamma(l+2 rho) / (l! (l+rho) Gamma(rho)^2).
double gegenbauer_norm(int l, double rho);

enum class Convention {
  DELTA,  // Gamma normalized so Delta N(f) = f; Gamma = c_n |x|^{2-n}
  RAW,    // bare kernel |x|^{2-n}
};

struct FundamentalSolution {
  int n = 3;
  Convention convention = Convention::DELTA;

  /// Normalization constant: 1/((2-n) s_n) for DELTA (so c_3 = -1/(4 pi)), 1 for RAW.
  double c() const;
  double gamma_at(const Vec& x) const;  // c * |x|^{2-n}
};

/// Closed-form representation of D^beta Gamma for the RAW kernel:
/// sum_q p_q(x) / |x|^{n-2+2q}. The DELTA value is c_n times this.
struct GammaDerivative {
  int n = 3;
  MultiIndex beta;
  std::map<int, Polynomial> numerators;  // q -> p_q

  double eval_raw(const Vec& x) const;
};

/// Memoized symbolic derivative table for one dimension.
class GammaDerivativeTable {
public:
  explicit GammaDerivativeTable(int n) : n_(n) {}
  const GammaDerivative& get(const MultiIndex& beta);

private:
  const GammaDerivative& get_locked(const MultiIndex& beta);

  int n_;
  std::map<MultiIndex, GammaDerivative> cache_;
  std::mutex mu_;
};

/// D^beta Gamma(x) under the chosen convention; x != 0.
double d_gamma(const MultiIndex& beta, const FundamentalSolution& fs, const Vec& x);

/// Shared per-dimension table (write-once-read-many behind a lock).
GammaDerivativeTable& gamma_table(int n);

struct ExpansionResult {
  double value = 0.0;
  double tail_bound = 0.0;  // geometric bound on the truncated tail
};

/// Partial Gegenbauer (zonal) expansion of Gamma(x - R yhat):
/// c R^{2-n} sum_{l<=L} (|x|/R)^l C_l^{((n-2)/2)}(xhat . yhat).
ExpansionResult kernel_gegenbauer_expansion(const FundamentalSolution& fs,
                                            const Vec& x, double R,
                                            const Vec& yhat, int L);

}  // namespace npot
