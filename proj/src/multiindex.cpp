#include "npot/multiindex.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace npot {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 3)
    throw std::invalid_argument("MultiIndex: dimension must be >= 3");
  for (int e : entries_)
    if (e < 0) throw std::invalid_argument("MultiIndex: negative entry");
  if (order() > kMaxOrder)
    throw std::invalid_argument("MultiIndex: order exceeds cap " +
                                std::to_string(kMaxOrder));
}

MultiIndex MultiIndex::zero(int dim) {
  return MultiIndex(std::vector<int>(dim, 0));
}

MultiIndex MultiIndex::unit(int dim, int axis) {
  std::vector<int> e(dim, 0);
  e.at(axis) = 1;
  return MultiIndex(std::move(e));
}

int MultiIndex::order() const {
  return std::accumulate(entries_.begin(), entries_.end(), 0);
}

std::int64_t MultiIndex::factorial() const {
  std::int64_t f = 1;
  for (int e : entries_)
    for (int i = 2; i <= e; ++i) f *= i;
  return f;
}

bool MultiIndex::operator<(const MultiIndex& o) const {
  if (dim() != o.dim()) return dim() < o.dim();
  return entries_ < o.entries_;
}

bool MultiIndex::leq(const MultiIndex& o) const {
  if (dim() != o.dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (entries_[i] > o.entries_[i]) return false;
  return true;
}

MultiIndex MultiIndex::plus(int axis) const {
  auto e = entries_;
  e.at(axis) += 1;
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::minus(int axis) const {
  auto e = entries_;
  if (e.at(axis) == 0) throw std::invalid_argument("MultiIndex::minus underflow");
  e[axis] -= 1;
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("MultiIndex: dim mismatch");
  auto e = entries_;
  for (int i = 0; i < dim(); ++i) e[i] += o.entries_[i];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::operator-(const MultiIndex& o) const {
  if (!o.leq(*this))
    throw std::invalid_argument("MultiIndex: subtrahend not componentwise <=");
  auto e = entries_;
  for (int i = 0; i < dim(); ++i) e[i] -= o.entries_[i];
  return MultiIndex(std::move(e));
}

double MultiIndex::power(const Vec& y, const Vec& base) const {
  double p = 1.0;
  for (int i = 0; i < dim(); ++i) {
    double d = y[i] - base[i];
    for (int k = 0; k < entries_[i]; ++k) p *= d;
  }
  return p;
}

double MultiIndex::power(const Vec& y) const {
  double p = 1.0;
  for (int i = 0; i < dim(); ++i)
    for (int k = 0; k < entries_[i]; ++k) p *= y[i];
  return p;
}

std::string MultiIndex::str() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim(); ++i) os << (i ? "," : "") << entries_[i];
  os << ')';
  return os.str();
}

namespace {

void nesting_rec(const MultiIndex& beta, const MultiIndex& cur,
                 std::vector<MultiIndex>& steps, std::vector<Nesting>& out) {
  if (cur == beta) {
    out.push_back(Nesting{steps, beta});
    return;
  }
  for (int i = 0; i < beta.dim(); ++i) {
    if (cur[i] < beta[i]) {
      MultiIndex next = cur.plus(i);
      steps.push_back(next);
      nesting_rec(beta, next, steps, out);
      steps.pop_back();
    }
  }
}

void order_rec(int n, int order, int pos, std::vector<int>& cur,
               std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[pos] = order;
    out.emplace_back(cur);
    return;
  }
  for (int v = 0; v <= order; ++v) {
    cur[pos] = v;
    order_rec(n, order - v, pos + 1, cur, out);
  }
}

}  // namespace

std::vector<Nesting> enumerate_nestings(const MultiIndex& beta) {
  std::vector<Nesting> out;
  if (beta.order() == 0) return out;
  std::vector<MultiIndex> steps;
  nesting_rec(beta, MultiIndex::zero(beta.dim()), steps, out);
  return out;
}

MultiIndex dual(const MultiIndex& gamma, const MultiIndex& beta) {
  return beta - gamma;
}

std::vector<MultiIndex> indices_of_order(int n, int order) {
  std::vector<MultiIndex> out;
  std::vector<int> cur(n, 0);
  order_rec(n, order, 0, cur, out);
  return out;
}

std::vector<MultiIndex> lambda_set(int n, int m) {
  if (n < 3 || m < 1) throw std::invalid_argument("lambda_set: need n>=3, m>=1");
  std::vector<MultiIndex> out;
  for (const auto& b : indices_of_order(n, 2 * m)) {
    bool odd = false;
    for (int i = 0; i < n; ++i)
      if (b[i] % 2 == 1) { odd = true; break; }
    if (odd) out.push_back(b);
  }
  return out;
}

double Jet::evaluate(const Vec& y) const {
  double s = 0.0;
  for (const auto& [mu, c] : coeffs) s += c * mu.power(y, base);
  return s;
}

}  // namespace npot
