#include "npot/rhs_dsl.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace npot::dsl {

namespace {

Expr make(NodeKind k, Expr l = nullptr, Expr r = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

bool is_const(const Expr& e, double v) {
  return e->kind == NodeKind::Const && e->value == v;
}

Expr add(Expr a, Expr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make(NodeKind::Add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return make(NodeKind::Neg, std::move(b));
  return make(NodeKind::Sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make(NodeKind::Mul, std::move(a), std::move(b));
}

class Parser {
public:
  Parser(const std::string& src, const SymbolTable& table)
      : src_(src), table_(table) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != static_cast<int>(src_.size()))
      throw ParseError("trailing input", pos_);
    return e;
  }

private:
  const std::string& src_;
  const SymbolTable& table_;
  int pos_ = 0;

  void skip_ws() {
    while (pos_ < static_cast<int>(src_.size()) && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < static_cast<int>(src_.size()) ? src_[pos_] : '\0';
  }

  bool accept(char c) {
    if (peek() == c) { ++pos_; return true; }
    return false;
  }

  void expect(char c) {
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  Expr expr() {
    Expr e = term();
    while (true) {
      if (accept('+')) e = make(NodeKind::Add, e, term());
      else if (accept('-')) e = make(NodeKind::Sub, e, term());
      else return e;
    }
  }

  Expr term() {
    Expr e = unary();
    while (true) {
      if (accept('*')) e = make(NodeKind::Mul, e, unary());
      else if (accept('/')) e = make(NodeKind::Div, e, unary());
      else return e;
    }
  }

  Expr unary() {
    if (accept('-')) return make(NodeKind::Neg, unary());
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!accept('^')) return base;
    skip_ws();
    int start = pos_;
    bool neg = accept('-');
    int v = 0;
    bool any = false;
    while (pos_ < static_cast<int>(src_.size()) && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      v = 10 * v + (src_[pos_] - '0');
      ++pos_;
      any = true;
    }
    if (!any || (pos_ < static_cast<int>(src_.size()) && src_[pos_] == '.'))
      throw ParseError("exponent must be an integer (use abspow for real powers)", start);
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pow;
    n->exponent = neg ? -v : v;
    n->lhs = base;
    return n;
  }

  double number_literal() {
    skip_ws();
    int start = pos_;
    bool neg = accept('-');
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(src_.substr(pos_), &used);
    } catch (const std::exception&) {
      throw ParseError("expected a number", start);
    }
    pos_ += static_cast<int>(used);
    return neg ? -v : v;
  }

  Expr atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::Const;
      n->value = number_literal();
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError("unexpected character", pos_);
  }

  Expr identifier() {
    int start = pos_;
    std::string name;
    while (pos_ < static_cast<int>(src_.size()) &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      name += src_[pos_++];

    if (peek() == '(') {
      ++pos_;
      if (name == "abspow") {
        Expr arg = expr();
        expect(',');
        double p = number_literal();
        expect(')');
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Abspow;
        n->lhs = arg;
        n->value = p;
        return n;
      }
      NodeKind k;
      if (name == "abs") k = NodeKind::Abs;
      else if (name == "exp") k = NodeKind::Exp;
      else if (name == "sin") k = NodeKind::Sin;
      else if (name == "cos") k = NodeKind::Cos;
      else if (name == "sign") k = NodeKind::Sign;
      else throw ParseError("unknown function '" + name + "'", start);
      Expr arg = expr();
      expect(')');
      return make(k, arg);
    }
    return variable(name, start);
  }

  Expr variable(const std::string& name, int start) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Var;
    n->var_name = name;
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u') &&
        name.find('_') == std::string::npos) {
      int idx = 0;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i])))
          throw ParseError("unknown identifier '" + name + "'", start);
        idx = 10 * idx + (name[i] - '0');
      }
      if (name[0] == 'x') {
        if (idx < 1 || idx > table_.n)
          throw ParseError("coordinate out of range in '" + name + "'", start);
        n->ref = {VarRef::Kind::X, idx, MultiIndex()};
      } else {
        if (idx < 1 || idx > table_.components)
          throw ParseError("component out of range in '" + name + "'", start);
        n->ref = {VarRef::Kind::U, idx, MultiIndex()};
      }
      return n;
    }
    if (name[0] == 'd') {
      auto us = name.find('_');
      if (us == std::string::npos || us < 2)
        throw ParseError("unknown identifier '" + name + "'", start);
      int comp = 0;
      for (std::size_t i = 1; i < us; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i])))
          throw ParseError("unknown identifier '" + name + "'", start);
        comp = 10 * comp + (name[i] - '0');
      }
      std::string digits = name.substr(us + 1);
      if (static_cast<int>(digits.size()) != table_.n)
        throw ParseError("derivative index in '" + name + "' must have " +
                             std::to_string(table_.n) + " digits",
                         start);
      std::vector<int> b(table_.n);
      for (int i = 0; i < table_.n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(digits[i])))
          throw ParseError("bad derivative index in '" + name + "'", start);
        b[i] = digits[i] - '0';
      }
      MultiIndex beta{std::vector<int>(b)};
      if (comp < 1 || comp > table_.components)
        throw ParseError("component out of range in '" + name + "'", start);
      if (beta.order() < 1 || beta.order() > table_.max_order)
        throw ParseError("derivative order out of range in '" + name + "'", start);
      n->ref = {VarRef::Kind::D, comp, beta};
      return n;
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }
};

}  // namespace

Expr constant(double c) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Const;
  n->value = c;
  return n;
}

Expr parse(const std::string& src, const SymbolTable& table) {
  return Parser(src, table).run();
}

double eval(const Expr& e, const Bindings& b) {
  switch (e->kind) {
    case NodeKind::Const: return e->value;
    case NodeKind::Var: {
      auto it = b.find(e->var_name);
      if (it == b.end()) throw EvalError("missing binding for " + e->var_name);
      return it->second;
    }
    case NodeKind::Add: return eval(e->lhs, b) + eval(e->rhs, b);
    case NodeKind::Sub: return eval(e->lhs, b) - eval(e->rhs, b);
    case NodeKind::Mul: return eval(e->lhs, b) * eval(e->rhs, b);
    case NodeKind::Div: {
      double d = eval(e->rhs, b);
      if (d == 0.0) throw EvalError("division by zero");
      return eval(e->lhs, b) / d;
    }
    case NodeKind::Neg: return -eval(e->lhs, b);
    case NodeKind::Pow: {
      double v = eval(e->lhs, b);
      if (e->exponent < 0 && v == 0.0) throw EvalError("zero to a negative power");
      return std::pow(v, e->exponent);
    }
    case NodeKind::Abs: return std::abs(eval(e->lhs, b));
    case NodeKind::Exp: return std::exp(eval(e->lhs, b));
    case NodeKind::Sin: return std::sin(eval(e->lhs, b));
    case NodeKind::Cos: return std::cos(eval(e->lhs, b));
    case NodeKind::Sign: {
      double v = eval(e->lhs, b);
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    case NodeKind::Abspow: {
      double v = std::abs(eval(e->lhs, b));
      if (v == 0.0) {
        if (e->value > 0.0) return 0.0;
        if (e->value == 0.0) return 1.0;
        throw EvalError("abspow(0, p) with p < 0");
      }
      return std::pow(v, e->value);
    }
  }
  throw EvalError("corrupt AST");
}

Expr partial(const Expr& e, const std::string& var) {
  switch (e->kind) {
    case NodeKind::Const: return constant(0.0);
    case NodeKind::Var: return constant(e->var_name == var ? 1.0 : 0.0);
    case NodeKind::Add: return add(partial(e->lhs, var), partial(e->rhs, var));
    case NodeKind::Sub: return sub(partial(e->lhs, var), partial(e->rhs, var));
    case NodeKind::Mul:
      return add(mul(partial(e->lhs, var), e->rhs),
                 mul(e->lhs, partial(e->rhs, var)));
    case NodeKind::Div:
      // (f/g)' = f'/g - f g'/g^2
      return sub(make(NodeKind::Div, partial(e->lhs, var), e->rhs),
                 make(NodeKind::Div, mul(e->lhs, partial(e->rhs, var)),
                      [&] {
                        auto sq = std::make_shared<Node>();
                        sq->kind = NodeKind::Pow;
                        sq->exponent = 2;
                        sq->lhs = e->rhs;
                        return Expr(sq);
                      }()));
    case NodeKind::Neg: {
      Expr d = partial(e->lhs, var);
      if (is_const(d, 0.0)) return d;
      return make(NodeKind::Neg, d);
    }
    case NodeKind::Pow: {
      Expr d = partial(e->lhs, var);
      if (is_const(d, 0.0)) return d;
      if (e->exponent == 0) return constant(0.0);
      auto down = std::make_shared<Node>();
      down->kind = NodeKind::Pow;
      down->exponent = e->exponent - 1;
      down->lhs = e->lhs;
      Expr body = (e->exponent == 1)
                      ? constant(1.0)
                      : Expr(down);
      return mul(mul(constant(static_cast<double>(e->exponent)), body), d);
    }
    case NodeKind::Abs:
      return mul(make(NodeKind::Sign, e->lhs), partial(e->lhs, var));
    case NodeKind::Exp:
      return mul(make(NodeKind::Exp, e->lhs), partial(e->lhs, var));
    case NodeKind::Sin:
      return mul(make(NodeKind::Cos, e->lhs), partial(e->lhs, var));
    case NodeKind::Cos:
      return make(NodeKind::Neg, mul(make(NodeKind::Sin, e->lhs), partial(e->lhs, var)));
    case NodeKind::Sign:
      return constant(0.0);  // a.e.; jump at 0 excluded by jittered sampling
    case NodeKind::Abspow: {
      Expr d = partial(e->lhs, var);
      if (is_const(d, 0.0)) return d;
      auto down = std::make_shared<Node>();
      down->kind = NodeKind::Abspow;
      down->value = e->value - 1.0;
      down->lhs = e->lhs;
      return mul(mul(constant(e->value),
                     mul(make(NodeKind::Sign, e->lhs), Expr(down))),
                 d);
    }
  }
  throw EvalError("corrupt AST");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string print(const Expr& e) {
  switch (e->kind) {
    case NodeKind::Const:
      return e->value < 0.0 ? "(" + fmt(e->value) + ")" : fmt(e->value);
    case NodeKind::Var: return e->var_name;
    case NodeKind::Add: return "(" + print(e->lhs) + " + " + print(e->rhs) + ")";
    case NodeKind::Sub: return "(" + print(e->lhs) + " - " + print(e->rhs) + ")";
    case NodeKind::Mul: return "(" + print(e->lhs) + " * " + print(e->rhs) + ")";
    case NodeKind::Div: return "(" + print(e->lhs) + " / " + print(e->rhs) + ")";
    case NodeKind::Neg: return "(-" + print(e->lhs) + ")";
    case NodeKind::Pow:
      return print(e->lhs) + "^" + std::to_string(e->exponent);
    case NodeKind::Abs: return "abs(" + print(e->lhs) + ")";
    case NodeKind::Exp: return "exp(" + print(e->lhs) + ")";
    case NodeKind::Sin: return "sin(" + print(e->lhs) + ")";
    case NodeKind::Cos: return "cos(" + print(e->lhs) + ")";
    case NodeKind::Sign: return "sign(" + print(e->lhs) + ")";
    case NodeKind::Abspow:
      return "abspow(" + print(e->lhs) + ", " + fmt(e->value) + ")";
  }
  return "?";
}

namespace {

void collect(const Expr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == NodeKind::Var) out.insert(e->var_name);
  collect(e->lhs, out);
  collect(e->rhs, out);
}

void walk_refs(const Expr& e, int& dep, bool& has_x) {
  if (!e) return;
  if (e->kind == NodeKind::Var) {
    switch (e->ref.kind) {
      case VarRef::Kind::X: has_x = true; break;
      case VarRef::Kind::U: dep = std::max(dep, 0); break;
      case VarRef::Kind::D: dep = std::max(dep, e->ref.beta.order()); break;
    }
  }
  walk_refs(e->lhs, dep, has_x);
  walk_refs(e->rhs, dep, has_x);
}

}  // namespace

std::set<std::string> variables(const Expr& e) {
  std::set<std::string> out;
  collect(e, out);
  return out;
}

int dependence_order(const Expr& e) {
  int dep = -1;
  bool hx = false;
  walk_refs(e, dep, hx);
  return dep;
}

bool references_x(const Expr& e) {
  int dep = -1;
  bool hx = false;
  walk_refs(e, dep, hx);
  return hx;
}

}  // namespace npot::dsl
