#pragma once

/// \file
/// Immutable expression trees over named variables with smooth primitives.
/// One tree evaluates over double (finite-difference oracle) and over Jet
/// (exact derivatives).

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cartanlab/errors.hpp"
#include "cartanlab/jet.hpp"

namespace cartanlab {

class Expr {
 public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, PowConst, Pow, Sqrt, Exp, Log, Sin, Cos };

  Expr() : Expr(0.0) {}
  Expr(double c) : node_(std::make_shared<Node>(Node{Op::Const, c, 0, {}})) {}  // NOLINT

  static Expr var(int index) { return Expr(std::make_shared<Node>(Node{Op::Var, 0.0, index, {}})); }

  Op op() const { return node_->op; }
  bool is_const() const { return node_->op == Op::Const; }
  double const_value() const { return node_->value; }

  friend Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() + b.const_value();
    if (a.is_const() && a.const_value() == 0.0) return b;
    if (b.is_const() && b.const_value() == 0.0) return a;
    return binary(Op::Add, a, b);
  }
  friend Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() - b.const_value();
    if (b.is_const() && b.const_value() == 0.0) return a;
    return binary(Op::Sub, a, b);
  }
  friend Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() * b.const_value();
    if ((a.is_const() && a.const_value() == 0.0) || (b.is_const() && b.const_value() == 0.0))
      return 0.0;
    if (a.is_const() && a.const_value() == 1.0) return b;
    if (b.is_const() && b.const_value() == 1.0) return a;
    return binary(Op::Mul, a, b);
  }
  friend Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() / b.const_value();
    if (b.is_const() && b.const_value() == 1.0) return a;
    return binary(Op::Div, a, b);
  }
  friend Expr operator-(const Expr& a) {
    if (a.is_const()) return -a.const_value();
    return unary(Op::Neg, a);
  }
  friend Expr pow(const Expr& a, double e) {
    if (a.is_const()) return std::pow(a.const_value(), e);
    if (e == 1.0) return a;
    auto n = std::make_shared<Node>(Node{Op::PowConst, e, 0, {a}});
    return Expr(std::move(n));
  }
  friend Expr pow(const Expr& a, const Expr& b) {
    if (b.is_const()) return pow(a, b.const_value());
    return binary(Op::Pow, a, b);
  }
  friend Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }
  friend Expr exp(const Expr& a) { return unary(Op::Exp, a); }
  friend Expr log(const Expr& a) { return unary(Op::Log, a); }
  friend Expr sin(const Expr& a) { return unary(Op::Sin, a); }
  friend Expr cos(const Expr& a) { return unary(Op::Cos, a); }

  /// Evaluates with variable k bound to vars[k].
  template <class T>
  T eval(std::span<const T> vars) const {
    return eval_node<T>(*node_, vars);
  }

  /// Largest variable index referenced, or -1.
  int max_var() const { return max_var_node(*node_); }

 private:
  struct Node {
    Op op;
    double value;
    int index;
    std::vector<Expr> args;
  };

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expr binary(Op op, const Expr& a, const Expr& b) {
    return Expr(std::make_shared<Node>(Node{op, 0.0, 0, {a, b}}));
  }
  static Expr unary(Op op, const Expr& a) {
    return Expr(std::make_shared<Node>(Node{op, 0.0, 0, {a}}));
  }

  static int max_var_node(const Node& n) {
    int m = n.op == Op::Var ? n.index : -1;
    for (const auto& a : n.args) m = std::max(m, max_var_node(*a.node_));
    return m;
  }

  template <class T>
  static T eval_node(const Node& n, std::span<const T> vars) {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    auto arg = [&](std::size_t k) { return eval_node<T>(*n.args[k].node_, vars); };
    switch (n.op) {
      case Op::Const: return T(n.value);
      case Op::Var:
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= vars.size())
          throw DomainError("expression references an unbound variable");
        return vars[static_cast<std::size_t>(n.index)];
      case Op::Add: return arg(0) + arg(1);
      case Op::Sub: return arg(0) - arg(1);
      case Op::Mul: return arg(0) * arg(1);
      case Op::Div: return arg(0) / arg(1);
      case Op::Neg: return -arg(0);
      case Op::PowConst: {
        const double e = n.value;
        if (e == std::round(e) && std::abs(e) <= 16) return pow(arg(0), static_cast<int>(e));
        return pow(arg(0), e);
      }
      case Op::Pow: return exp(arg(1) * log(arg(0)));
      case Op::Sqrt: return sqrt(arg(0));
      case Op::Exp: return exp(arg(0));
      case Op::Log: return log(arg(0));
      case Op::Sin: return sin(arg(0));
      case Op::Cos: return cos(arg(0));
    }
    throw DomainError("unknown expression node");
  }

  std::shared_ptr<const Node> node_;
};

/// Recursive-descent parser for infix expressions.
///
/// Grammar: sums of products of powers (`^` right-associative), unary minus,
/// parentheses, numeric literals, and calls sqrt/exp/log/sin/cos/pow.
/// Identifiers are resolved against `names` (position = variable index).
class ExprParser {
 public:
  ExprParser(std::string text, std::vector<std::string> names)
      : text_(std::move(text)), names_(std::move(names)) {}

  Expr parse() {
    Expr e = sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "expression '" << text_ << "': " << what << " at column " << pos_ + 1;
    throw ParseError(os.str());
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr sum() {
    Expr e = product();
    for (;;) {
      if (accept('+')) e = e + product();
      else if (accept('-')) e = e - product();
      else return e;
    }
  }

  Expr product() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) e = e * unary();
      else if (accept('/')) e = e / unary();
      else return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      Expr e = sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string id = text_.substr(start, pos_ - start);
    if (accept('(')) {
      Expr a = sum();
      if (id == "pow") {
        expect(',');
        Expr b = sum();
        expect(')');
        return pow(a, b);
      }
      expect(')');
      if (id == "sqrt") return sqrt(a);
      if (id == "exp") return exp(a);
      if (id == "log") return log(a);
      if (id == "sin") return sin(a);
      if (id == "cos") return cos(a);
      pos_ = start;
      fail("unknown function '" + id + "'");
    }
    for (std::size_t k = 0; k < names_.size(); ++k) {
      if (names_[k] == id) return Expr::var(static_cast<int>(k));
    }
    pos_ = start;
    fail("unknown variable '" + id + "'");
  }

  std::string text_;
  std::vector<std::string> names_;
  std::size_t pos_ = 0;
};

/// Variable names x1..xn, p1..pn in chart ordering.
inline std::vector<std::string> chart_variable_names(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back("p" + std::to_string(i));
  return names;
}

inline Expr parse_chart_expression(const std::string& text, int n) {
  return ExprParser(text, chart_variable_names(n)).parse();
}

}  // namespace cartanlab
