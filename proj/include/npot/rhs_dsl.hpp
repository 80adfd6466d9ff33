#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>

#include "npot/multiindex.hpp"

namespace npot::dsl {

/// Declares which identifiers are legal: x1..xn, u1..uN, and d{i}_{digits}
/// where i <= N, the digit string has length n and each digit is a partial
/// derivative count (so d1_100 is the first x-derivative of u1).
struct SymbolTable {
  int n = 3;          // space dimension
  int components = 1; // number of unknowns u1..uN
  int max_order = 0;  // maximum |beta| allowed in d-variables (2m)
};

struct ParseError : std::runtime_error {
  int position;
  ParseError(const std::string& msg, int pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)),
        position(pos) {}
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NodeKind {
  Const, Var, Add, Sub, Mul, Div, Neg, Pow,  // Pow: integer exponent
  Abs, Exp, Sin, Cos, Sign, Abspow           // Abspow: |arg|^p, real p
};

/// Parsed variable reference.
struct VarRef {
  enum class Kind { X, U, D } kind;
  int index = 0;    // coordinate (X) or component (U, D), 1-based
  MultiIndex beta;  // D only
};

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double value = 0.0;       // Const; Abspow exponent
  int exponent = 0;         // Pow
  std::string var_name;     // Var
  VarRef ref;               // Var
  Expr lhs, rhs;
};

using Bindings = std::map<std::string, double>;

Expr parse(const std::string& src, const SymbolTable& table);
double eval(const Expr& e, const Bindings& b);
Expr partial(const Expr& e, const std::string& var);
std::string print(const Expr& e);

std::set<std::string> variables(const Expr& e);
/// max |beta| over referenced d-variables; u-variables count as order 0,
/// -1 when no u/d variable appears.
int dependence_order(const Expr& e);
bool references_x(const Expr& e);

Expr constant(double c);

}  // namespace npot::dsl
