#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lprop/errors.hpp"

namespace lprop {

/// Immutable scalar expression tree over coordinates x1..xn. Nodes are
/// shared and never mutated after construction, so trees are cheap to
/// copy and safe for concurrent reads.
class Expr {
 public:
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

  Expr() : node_(std::make_shared<Node>(Node{Kind::Constant, 0.0, 0, nullptr, nullptr})) {}

  static Expr constant(double v) {
    return Expr(std::make_shared<Node>(Node{Kind::Constant, v, 0, nullptr, nullptr}));
  }

  /// 1-based coordinate index, printed as x<i>.
  static Expr variable(int index) {
    if (index < 1) throw DomainError("variable index must be >= 1");
    return Expr(std::make_shared<Node>(Node{Kind::Variable, 0.0, index, nullptr, nullptr}));
  }

  static Expr binary(Kind k, Expr a, Expr b) {
    return Expr(std::make_shared<Node>(Node{k, 0.0, 0, a.node_, b.node_}));
  }

  static Expr unary(Kind k, Expr a) {
    return Expr(std::make_shared<Node>(Node{k, 0.0, 0, a.node_, nullptr}));
  }

  /// Integer power, exponent >= 0.
  static Expr pow(Expr base, int exponent) {
    if (exponent < 0) throw DomainError("negative exponent not supported");
    return Expr(std::make_shared<Node>(Node{Kind::Pow, 0.0, exponent, base.node_, nullptr}));
  }

  friend Expr operator+(Expr a, Expr b) { return binary(Kind::Add, a, b); }
  friend Expr operator-(Expr a, Expr b) { return binary(Kind::Sub, a, b); }
  friend Expr operator*(Expr a, Expr b) { return binary(Kind::Mul, a, b); }
  friend Expr operator/(Expr a, Expr b) { return binary(Kind::Div, a, b); }
  friend Expr operator-(Expr a) { return unary(Kind::Neg, a); }
  static Expr sin(Expr a) { return unary(Kind::Sin, a); }
  static Expr cos(Expr a) { return unary(Kind::Cos, a); }
  static Expr exp(Expr a) { return unary(Kind::Exp, a); }

  Kind kind() const { return node_->kind; }

  bool is_constant() const { return node_->kind == Kind::Constant; }
  bool is_constant(double v) const {
    return is_constant() && node_->value == v;
  }
  double constant_value() const { return node_->value; }

  /// Largest coordinate index appearing in the tree (0 for constants).
  int max_variable() const { return max_variable(node_.get()); }

  double evaluate(std::span<const double> p) const { return eval(node_.get(), p); }

  Expr differentiate(int axis) const {
    if (axis < 1) throw DomainError("derivative axis must be >= 1");
    return diff(node_.get(), axis);
  }

  Expr simplified() const { return simplify(node_.get()); }

  std::string to_string() const {
    std::string out;
    print(node_.get(), 0, out);
    return out;
  }

  bool structurally_equal(const Expr& other) const {
    return equal(node_.get(), other.node_.get());
  }

 private:
  struct Node {
    Kind kind;
    double value;                     // Constant
    int index;                        // Variable index or Pow exponent
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expr wrap(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }

  static int max_variable(const Node* n) {
    if (!n) return 0;
    if (n->kind == Kind::Variable) return n->index;
    int m = 0;
    if (n->lhs) m = std::max(m, max_variable(n->lhs.get()));
    if (n->rhs) m = std::max(m, max_variable(n->rhs.get()));
    return m;
  }

  static double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
  }

  static double eval(const Node* n, std::span<const double> p) {
    switch (n->kind) {
      case Kind::Constant: return n->value;
      case Kind::Variable:
        if (n->index > static_cast<int>(p.size()))
          throw DomainError("point has dimension " + std::to_string(p.size()) +
                            " but expression uses x" + std::to_string(n->index));
        return p[static_cast<std::size_t>(n->index - 1)];
      case Kind::Add: return eval(n->lhs.get(), p) + eval(n->rhs.get(), p);
      case Kind::Sub: return eval(n->lhs.get(), p) - eval(n->rhs.get(), p);
      case Kind::Mul: return eval(n->lhs.get(), p) * eval(n->rhs.get(), p);
      case Kind::Div: {
        const double d = eval(n->rhs.get(), p);
        if (d == 0.0) throw DomainError("division by zero during evaluation");
        return eval(n->lhs.get(), p) / d;
      }
      case Kind::Pow: return ipow(eval(n->lhs.get(), p), n->index);
      case Kind::Neg: return -eval(n->lhs.get(), p);
      case Kind::Sin: return std::sin(eval(n->lhs.get(), p));
      case Kind::Cos: return std::cos(eval(n->lhs.get(), p));
      case Kind::Exp: return std::exp(eval(n->lhs.get(), p));
    }
    throw Error("corrupt expression node");
  }

  static Expr diff(const Node* n, int axis) {
    const Expr lhs = n->lhs ? wrap(n->lhs) : Expr();
    const Expr rhs = n->rhs ? wrap(n->rhs) : Expr();
    switch (n->kind) {
      case Kind::Constant: return constant(0.0);
      case Kind::Variable: return constant(n->index == axis ? 1.0 : 0.0);
      case Kind::Add: return lhs.differentiate(axis) + rhs.differentiate(axis);
      case Kind::Sub: return lhs.differentiate(axis) - rhs.differentiate(axis);
      case Kind::Mul:
        return lhs.differentiate(axis) * rhs + lhs * rhs.differentiate(axis);
      case Kind::Div:
        // (u/v)' = (u'v - uv') / v^2
        return (lhs.differentiate(axis) * rhs - lhs * rhs.differentiate(axis)) /
               pow(rhs, 2);
      case Kind::Pow: {
        if (n->index == 0) return constant(0.0);
        return constant(static_cast<double>(n->index)) * pow(lhs, n->index - 1) *
               lhs.differentiate(axis);
      }
      case Kind::Neg: return -lhs.differentiate(axis);
      case Kind::Sin: return cos(lhs) * lhs.differentiate(axis);
      case Kind::Cos: return -(sin(lhs) * lhs.differentiate(axis));
      case Kind::Exp: return exp(lhs) * lhs.differentiate(axis);
    }
    throw Error("corrupt expression node");
  }

  // Value-preserving local rewrites; children are already simplified.
  static Expr rewrite(Kind k, int meta, const Expr& a, const Expr& b) {
    const bool ac = a.is_constant();
    const bool bc = b.is_constant();
    switch (k) {
      case Kind::Add:
        if (ac && bc) return constant(a.constant_value() + b.constant_value());
        if (ac && a.constant_value() == 0.0) return b;
        if (bc && b.constant_value() == 0.0) return a;
        return binary(k, a, b);
      case Kind::Sub:
        if (ac && bc) return constant(a.constant_value() - b.constant_value());
        if (bc && b.constant_value() == 0.0) return a;
        if (ac && a.constant_value() == 0.0) return rewrite(Kind::Neg, 0, b, Expr());
        return binary(k, a, b);
      case Kind::Mul:
        if (ac && bc) return constant(a.constant_value() * b.constant_value());
        if ((ac && a.constant_value() == 0.0) || (bc && b.constant_value() == 0.0))
          return constant(0.0);
        if (ac && a.constant_value() == 1.0) return b;
        if (bc && b.constant_value() == 1.0) return a;
        return binary(k, a, b);
      case Kind::Div:
        if (bc && b.constant_value() == 1.0) return a;
        if (ac && bc && b.constant_value() != 0.0)
          return constant(a.constant_value() / b.constant_value());
        return binary(k, a, b);
      case Kind::Pow:
        if (meta == 0) return constant(1.0);
        if (meta == 1) return a;
        if (ac) return constant(ipow(a.constant_value(), meta));
        return pow(a, meta);
      case Kind::Neg:
        if (ac) return constant(-a.constant_value());
        if (a.kind() == Kind::Neg) return wrap(a.node_->lhs);
        return unary(k, a);
      case Kind::Sin:
        if (ac) return constant(std::sin(a.constant_value()));
        return unary(k, a);
      case Kind::Cos:
        if (ac) return constant(std::cos(a.constant_value()));
        return unary(k, a);
      case Kind::Exp:
        if (ac) return constant(std::exp(a.constant_value()));
        return unary(k, a);
      default: return binary(k, a, b);
    }
  }

  static Expr simplify(const Node* n) {
    switch (n->kind) {
      case Kind::Constant:
      case Kind::Variable:
        return wrap(std::make_shared<Node>(*n));
      case Kind::Pow:
      case Kind::Neg:
      case Kind::Sin:
      case Kind::Cos:
      case Kind::Exp:
        return rewrite(n->kind, n->index, simplify(n->lhs.get()), Expr());
      default:
        return rewrite(n->kind, n->index, simplify(n->lhs.get()),
                       simplify(n->rhs.get()));
    }
  }

  static bool equal(const Node* a, const Node* b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case Kind::Constant: return a->value == b->value;
      case Kind::Variable: return a->index == b->index;
      case Kind::Pow:
        if (a->index != b->index) return false;
        return equal(a->lhs.get(), b->lhs.get());
      case Kind::Neg:
      case Kind::Sin:
      case Kind::Cos:
      case Kind::Exp:
        return equal(a->lhs.get(), b->lhs.get());
      default:
        return equal(a->lhs.get(), b->lhs.get()) && equal(a->rhs.get(), b->rhs.get());
    }
  }

  // Precedence levels used by the printer: + - (1), * / (2), unary - (3),
  // ^ (4), atoms (5).
  static int precedence(Kind k) {
    switch (k) {
      case Kind::Add:
      case Kind::Sub: return 1;
      case Kind::Mul:
      case Kind::Div: return 2;
      case Kind::Neg: return 3;
      case Kind::Pow: return 4;
      default: return 5;
    }
  }

  static void print(const Node* n, int parent_prec, std::string& out) {
    const int prec = precedence(n->kind);
    const bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (n->kind) {
      case Kind::Constant: {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", n->value);
        if (n->value < 0) {
          out += '(';
          out += buf;
          out += ')';
        } else {
          out += buf;
        }
        break;
      }
      case Kind::Variable:
        out += 'x';
        out += std::to_string(n->index);
        break;
      case Kind::Add:
        print(n->lhs.get(), prec, out);
        out += " + ";
        print(n->rhs.get(), prec, out);
        break;
      case Kind::Sub:
        print(n->lhs.get(), prec, out);
        out += " - ";
        print(n->rhs.get(), prec + 1, out);
        break;
      case Kind::Mul:
        print(n->lhs.get(), prec, out);
        out += "*";
        print(n->rhs.get(), prec, out);
        break;
      case Kind::Div:
        print(n->lhs.get(), prec, out);
        out += "/";
        print(n->rhs.get(), prec + 1, out);
        break;
      case Kind::Pow:
        print(n->lhs.get(), prec + 1, out);
        out += "^";
        out += std::to_string(n->index);
        break;
      case Kind::Neg:
        out += "-";
        print(n->lhs.get(), prec + 1, out);
        break;
      case Kind::Sin:
      case Kind::Cos:
      case Kind::Exp:
        out += (n->kind == Kind::Sin ? "sin(" : n->kind == Kind::Cos ? "cos(" : "exp(");
        print(n->lhs.get(), 0, out);
        out += ')';
        break;
    }
    if (parens) out += ')';
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

/// Recursive-descent parser for the expression grammar. Precedence from
/// loosest to tightest: + - , * / , unary - , ^ with a nonnegative
/// integer exponent. Functions: sin, cos, exp. Variables: x1..x<dim>.
class ExprParser {
 public:
  ExprParser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr parse() {
    Expr e = sum();
    skip_space();
    if (pos_ != text_.size())
      throw ParseError(pos_, "unexpected trailing input '" +
                                 std::string(text_.substr(pos_)) + "'");
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr sum() {
    Expr e = product();
    for (;;) {
      if (eat('+')) {
        e = e + product();
      } else if (eat('-')) {
        e = e - product();
      } else {
        return e;
      }
    }
  }

  Expr product() {
    Expr e = unary();
    for (;;) {
      if (eat('*')) {
        e = e * unary();
      } else if (eat('/')) {
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (eat('-')) return -unary();
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (eat('^')) {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      if (pos_ == start)
        throw ParseError(start, "exponent must be a nonnegative integer literal");
      int exponent = 0;
      for (std::size_t i = start; i < pos_; ++i) {
        exponent = exponent * 10 + (text_[i] - '0');
        if (exponent > 64) throw ParseError(start, "exponent too large");
      }
      return Expr::pow(base, exponent);
    }
    return base;
  }

  Expr atom() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(pos_, "unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = sum();
      if (!eat(')')) throw ParseError(pos_, "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(pos_, std::string("unexpected character '") + c + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t epos = pos_ + 1;
      if (epos < text_.size() && (text_[epos] == '+' || text_[epos] == '-')) ++epos;
      if (epos < text_.size() && std::isdigit(static_cast<unsigned char>(text_[epos]))) {
        pos_ = epos;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
      }
    }
    const std::string tok(text_.substr(start, pos_ - start));
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return Expr::constant(v);
    } catch (const std::exception&) {
      throw ParseError(start, "malformed number '" + tok + "'");
    }
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (name == "sin" || name == "cos" || name == "exp") {
      if (!eat('(')) throw ParseError(pos_, "expected '(' after " + name);
      Expr arg = sum();
      if (!eat(')')) throw ParseError(pos_, "expected ')'");
      if (name == "sin") return Expr::sin(arg);
      if (name == "cos") return Expr::cos(arg);
      return Expr::exp(arg);
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int idx = 0;
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
          digits = false;
          break;
        }
        idx = idx * 10 + (name[i] - '0');
        if (idx > 1000) break;
      }
      if (digits && idx >= 1) {
        if (idx > dim_)
          throw ParseError(start, "variable x" + std::to_string(idx) +
                                      " exceeds dimension " + std::to_string(dim_));
        return Expr::variable(idx);
      }
    }
    throw ParseError(start, "unknown identifier '" + name + "'");
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse an infix expression using coordinates x1..x<dim>.
inline Expr parse_expression(std::string_view text, int dim) {
  if (dim < 1) throw DomainError("dimension must be positive");
  return detail::ExprParser(text, dim).parse();
}

}  // namespace lprop
