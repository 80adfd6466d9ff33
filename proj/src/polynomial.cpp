#include "npot/polynomial.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace npot {

Polynomial Polynomial::constant(int dim, double c) {
  Polynomial p(dim);
  p.add_term(MultiIndex::zero(dim), c);
  return p;
}

Polynomial Polynomial::monomial(const MultiIndex& idx, double c) {
  Polynomial p(idx.dim());
  p.add_term(idx, c);
  return p;
}

Polynomial Polynomial::radius_squared(int dim) {
  Polynomial p(dim);
  for (int i = 0; i < dim; ++i) {
    auto e = MultiIndex::unit(dim, i);
    p.add_term(e + e, 1.0);
  }
  return p;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [idx, c] : terms_) d = std::max(d, idx.order());
  return d;
}

bool Polynomial::is_homogeneous() const {
  int d = -2;
  for (const auto& [idx, c] : terms_) {
    if (d == -2) d = idx.order();
    else if (idx.order() != d) return false;
  }
  return true;
}

void Polynomial::add_term(const MultiIndex& idx, double c) {
  if (idx.dim() != dim_) throw std::invalid_argument("Polynomial: dim mismatch");
  auto it = terms_.find(idx);
  double v = (it == terms_.end() ? 0.0 : it->second) + c;
  if (std::abs(v) < kDropTol) {
    if (it != terms_.end()) terms_.erase(it);
  } else {
    terms_[idx] = v;
  }
}

double Polynomial::coeff(const MultiIndex& idx) const {
  auto it = terms_.find(idx);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [idx, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [idx, c] : o.terms_) r.add_term(idx, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [idx, c] : o.terms_) r.add_term(idx, -c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(dim_);
  for (const auto& [a, ca] : terms_)
    for (const auto& [b, cb] : o.terms_) r.add_term(a + b, ca * cb);
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(dim_);
  for (const auto& [idx, c] : terms_) r.add_term(idx, c * s);
  return r;
}

Polynomial Polynomial::partial(int axis) const {
  Polynomial r(dim_);
  for (const auto& [idx, c] : terms_) {
    int e = idx[axis];
    if (e > 0) r.add_term(idx.minus(axis), c * e);
  }
  return r;
}

Polynomial Polynomial::laplacian() const {
  Polynomial r(dim_);
  for (int i = 0; i < dim_; ++i) r = r + partial(i).partial(i);
  return r;
}

Polynomial Polynomial::derivative(const MultiIndex& beta) const {
  Polynomial r = *this;
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < beta[i]; ++k) r = r.partial(i);
  return r;
}

double Polynomial::eval(const Vec& x) const {
  double s = 0.0;
  for (const auto& [idx, c] : terms_) s += c * idx.power(x);
  return s;
}

Jet Polynomial::jet(const Vec& x, int order) const {
  Jet j;
  j.base = x;
  j.order = order;
  for (const auto& mu : [&] {
         std::vector<MultiIndex> all;
         for (int k = 0; k <= order; ++k)
           for (const auto& m : indices_of_order(dim_, k)) all.push_back(m);
         return all;
       }()) {
    double d = derivative(mu).eval(x);
    if (d != 0.0) j.coeffs[mu] = d / static_cast<double>(mu.factorial());
  }
  return j;
}

std::string Polynomial::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [idx, c] : terms_) {
    os << (first ? "" : " + ") << c << "*x^" << idx.str();
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

Polynomial HarmonicDecomposition::recombine(int dim) const {
  Polynomial r(dim);
  Polynomial r2 = Polynomial::radius_squared(dim);
  for (const auto& comp : components) {
    Polynomial f = comp.part;
    for (int i = 0; i < comp.power; ++i) f = f * r2;
    r = r + f;
  }
  return r;
}

HarmonicDecomposition harmonic_decompose(const Polynomial& p) {
  if (!p.is_homogeneous())
    throw std::invalid_argument("harmonic_decompose: input not homogeneous");
  int n = p.dim();
  int k = std::max(p.degree(), 0);
  int ncomp = k / 2 + 1;

  // Unknowns: coefficients of P_{k-2i}, i = 0..k/2, in the monomial basis.
  std::vector<std::vector<MultiIndex>> basis(ncomp);
  std::vector<int> offset(ncomp, 0);
  int nunk = 0;
  for (int i = 0; i < ncomp; ++i) {
    basis[i] = indices_of_order(n, k - 2 * i);
    offset[i] = nunk;
    nunk += static_cast<int>(basis[i].size());
  }

  // Rows: match every degree-k coefficient of sum_i |x|^{2i} P_{k-2i};
  // then Delta P_{k-2i} = 0 coefficientwise.
  auto deg_k = indices_of_order(n, k);
  std::map<MultiIndex, int> row_of;
  for (int r = 0; r < static_cast<int>(deg_k.size()); ++r) row_of[deg_k[r]] = r;

  int nrow = static_cast<int>(deg_k.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nrow);
  for (const auto& [idx, c] : p.terms()) rhs[row_of.at(idx)] = c;

  Polynomial r2 = Polynomial::radius_squared(n);
  std::vector<Polynomial> r2pow{Polynomial::constant(n, 1.0)};
  for (int i = 1; i < ncomp; ++i) r2pow.push_back(r2pow.back() * r2);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nrow, nunk);
  for (int i = 0; i < ncomp; ++i) {
    for (int b = 0; b < static_cast<int>(basis[i].size()); ++b) {
      Polynomial contrib = r2pow[i] * Polynomial::monomial(basis[i][b], 1.0);
      for (const auto& [idx, c] : contrib.terms())
        A(row_of.at(idx), offset[i] + b) += c;
    }
  }

  // Harmonicity rows appended below.
  std::vector<Eigen::RowVectorXd> hrows;
  for (int i = 0; i < ncomp; ++i) {
    int deg = k - 2 * i;
    if (deg < 2) continue;
    auto lap_basis = indices_of_order(n, deg - 2);
    std::map<MultiIndex, int> lrow;
    for (int r = 0; r < static_cast<int>(lap_basis.size()); ++r)
      lrow[lap_basis[r]] = r;
    std::vector<Eigen::RowVectorXd> rows(
        lap_basis.size(), Eigen::RowVectorXd::Zero(nunk));
    for (int b = 0; b < static_cast<int>(basis[i].size()); ++b) {
      Polynomial lap = Polynomial::monomial(basis[i][b], 1.0).laplacian();
      for (const auto& [idx, c] : lap.terms())
        rows[lrow.at(idx)](offset[i] + b) += c;
    }
    for (auto& r : rows) hrows.push_back(r);
  }

  Eigen::MatrixXd M(nrow + hrows.size(), nunk);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nrow + hrows.size());
  M.topRows(nrow) = A;
  b.head(nrow) = rhs;
  for (int r = 0; r < static_cast<int>(hrows.size()); ++r)
    M.row(nrow + r) = hrows[r];

  Eigen::VectorXd sol = M.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);

  HarmonicDecomposition out;
  for (int i = 0; i < ncomp; ++i) {
    Polynomial part(n);
    for (int bi = 0; bi < static_cast<int>(basis[i].size()); ++bi) {
      double c = sol[offset[i] + bi];
      if (std::abs(c) >= Polynomial::kDropTol) part.add_term(basis[i][bi], c);
    }
    out.components.push_back({i, part});
  }
  return out;
}

bool is_m_harmonic(const Polynomial& p, int m, double tol) {
  if (m < 1) throw std::invalid_argument("is_m_harmonic: m >= 1 required");
  Polynomial q = p;
  for (int i = 0; i < m; ++i) q = q.laplacian();
  return q.max_abs_coeff() < tol;
}

}  // namespace npot
