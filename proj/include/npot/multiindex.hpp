#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace npot {

using Vec = std::vector<double>;

/// Multi-index in R^n (n >= 3). Entries are non-negative; |beta| is capped at
/// 20 so that beta! = prod_i beta_i! stays inside int64 range.
class MultiIndex {
public:
  static constexpr int kMaxOrder = 20;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);
  static MultiIndex zero(int dim);
  static MultiIndex unit(int dim, int axis);  // e_axis

  int dim() const { return static_cast<int>(entries_.size()); }
  int order() const;
  std::int64_t factorial() const;
  int operator[](int i) const { return entries_[i]; }
  const std::vector<int>& entries() const { return entries_; }

  bool operator==(const MultiIndex& o) const { return entries_ == o.entries_; }
  bool operator!=(const MultiIndex& o) const { return entries_ != o.entries_; }
  bool operator<(const MultiIndex& o) const;  // dim, then lexicographic; map key order

  bool leq(const MultiIndex& o) const;  // componentwise <=
  MultiIndex plus(int axis) const;
  MultiIndex minus(int axis) const;
  MultiIndex operator+(const MultiIndex& o) const;
  MultiIndex operator-(const MultiIndex& o) const;  // requires o.leq(*this)

  /// (y - base)^beta
  double power(const Vec& y, const Vec& base) const;
  double power(const Vec& y) const;

  std::string str() const;

private:
  std::vector<int> entries_;
};

/// Chain beta^(1) < ... < beta^(k) = steps, each step raising the order by one,
/// ending at the target.
struct Nesting {
  std::vector<MultiIndex> steps;
  MultiIndex target;
};

/// All continuously increasing nestings of length |beta| for beta, in
/// lexicographic order of the chosen axis sequence. Count is |beta|!/beta!.
std::vector<Nesting> enumerate_nestings(const MultiIndex& beta);

/// beta - gamma, so that D^beta = D^gamma D^dual. Throws if gamma !<= beta.
MultiIndex dual(const MultiIndex& gamma, const MultiIndex& beta);

/// All multi-indices of the given order in dimension n.
std::vector<MultiIndex> indices_of_order(int n, int order);

/// Order-2m indices with at least one odd entry.
std::vector<MultiIndex> lambda_set(int n, int m);

/// Taylor jet at a base point. Coefficients store D^mu f(x)/mu! so that
/// evaluation is a plain dot product against (y-x)^mu.
struct Jet {
  Vec base;
  int order = 0;
  std::map<MultiIndex, double> coeffs;

  double evaluate(const Vec& y) const;
};

}  // namespace npot
