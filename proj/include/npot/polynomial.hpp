#pragma once

#include <map>
#include <vector>

#include "npot/multiindex.hpp"

namespace npot {

/// Sparse multivariate polynomial over R^n. Coefficients below the drop
/// tolerance 1e-14 are not stored.
class Polynomial {
public:
  static constexpr double kDropTol = 1e-14;

  explicit Polynomial(int dim) : dim_(dim) {}
  static Polynomial constant(int dim, double c);
  static Polynomial monomial(const MultiIndex& idx, double c);
  static Polynomial radius_squared(int dim);  // |x|^2

  int dim() const { return dim_; }
  const std::map<MultiIndex, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  int degree() const;  // -1 for the zero polynomial
  bool is_homogeneous() const;

  void add_term(const MultiIndex& idx, double c);
  double coeff(const MultiIndex& idx) const;
  double max_abs_coeff() const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;

  Polynomial partial(int axis) const;
  Polynomial laplacian() const;
  Polynomial derivative(const MultiIndex& beta) const;

  double eval(const Vec& x) const;
  Jet jet(const Vec& x, int order) const;  // exact Taylor jet

  std::string str() const;

private:
  int dim_;
  std::map<MultiIndex, double> terms_;
};

struct HarmonicComponent {
  int power;          // i in |x|^{2i} P_{k-2i}
  Polynomial part;    // homogeneous harmonic of degree k-2i
};

struct HarmonicDecomposition {
  std::vector<HarmonicComponent> components;
  Polynomial recombine(int dim) const;
};

/// Decompose a homogeneous polynomial of degree k as sum_i |x|^{2i} P_{k-2i}
/// with each P_j homogeneous harmonic. Solved as a least-squares system of
/// coefficient-matching plus harmonicity constraints.
HarmonicDecomposition harmonic_decompose(const Polynomial& p);

/// True iff all coefficients of Delta^m p are below 1e-12.
bool is_m_harmonic(const Polynomial& p, int m, double tol = 1e-12);

}  // namespace npot
