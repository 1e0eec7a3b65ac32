#include "biharm/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace biharm {

struct Expression::Node {
  enum class Kind { Number, X1, X2, Neg, Add, Sub, Mul, Div, Sin, Cos, Exp, Abs };
  Kind kind;
  double value = 0.0;
  std::size_t pos = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind k, std::size_t pos, NodePtr l = nullptr, NodePtr r = nullptr, double v = 0.0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->pos = pos;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip();
    if (i_ != s_.size()) throw ExpressionError("unexpected '" + std::string(1, s_[i_]) + "'", i_);
    return e;
  }

  bool uses_x2 = false;

 private:
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  bool accept(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (i_ >= s_.size()) throw ExpressionError(std::string("expected '") + c + "' but input ended", i_);
      throw ExpressionError(std::string("expected '") + c + "'", i_);
    }
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      skip();
      const std::size_t p = i_;
      if (accept('+')) {
        left = make(Node::Kind::Add, p, left, term());
      } else if (accept('-')) {
        left = make(Node::Kind::Sub, p, left, term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      skip();
      const std::size_t p = i_;
      if (accept('*')) {
        left = make(Node::Kind::Mul, p, left, unary());
      } else if (accept('/')) {
        left = make(Node::Kind::Div, p, left, unary());
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    skip();
    const std::size_t p = i_;
    if (accept('-')) return make(Node::Kind::Neg, p, unary());
    if (accept('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip();
    const std::size_t p = i_;
    if (i_ >= s_.size()) throw ExpressionError("unexpected end of expression", i_);
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (accept('(')) {
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() && std::isalnum(static_cast<unsigned char>(s_[j]))) ++j;
      const std::string name = s_.substr(i_, j - i_);
      i_ = j;
      if (name == "x1") return make(Node::Kind::X1, p);
      if (name == "x2") {
        uses_x2 = true;
        return make(Node::Kind::X2, p);
      }
      if (name == "pi") return make(Node::Kind::Number, p, nullptr, nullptr, std::numbers::pi);
      Node::Kind k;
      if (name == "sin") {
        k = Node::Kind::Sin;
      } else if (name == "cos") {
        k = Node::Kind::Cos;
      } else if (name == "exp") {
        k = Node::Kind::Exp;
      } else if (name == "abs") {
        k = Node::Kind::Abs;
      } else {
        throw ExpressionError("unknown identifier '" + name + "'", p);
      }
      expect('(');
      NodePtr arg = expr();
      expect(')');
      return make(k, p, arg);
    }
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", p);
  }

  NodePtr number() {
    const std::size_t p = i_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + i_, s_.data() + s_.size(), v);
    if (ec != std::errc() || ptr == s_.data() + i_) throw ExpressionError("malformed number", p);
    i_ = static_cast<std::size_t>(ptr - s_.data());
    return make(Node::Kind::Number, p, nullptr, nullptr, v);
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

double eval(const Node& n, double x1, double x2) {
  switch (n.kind) {
    case Node::Kind::Number: return n.value;
    case Node::Kind::X1: return x1;
    case Node::Kind::X2: return x2;
    case Node::Kind::Neg: return -eval(*n.lhs, x1, x2);
    case Node::Kind::Add: return eval(*n.lhs, x1, x2) + eval(*n.rhs, x1, x2);
    case Node::Kind::Sub: return eval(*n.lhs, x1, x2) - eval(*n.rhs, x1, x2);
    case Node::Kind::Mul: return eval(*n.lhs, x1, x2) * eval(*n.rhs, x1, x2);
    case Node::Kind::Div: {
      const double d = eval(*n.rhs, x1, x2);
      if (d == 0.0) throw ExpressionError("division by zero at x1=" + std::to_string(x1) + ", x2=" + std::to_string(x2), n.pos);
      return eval(*n.lhs, x1, x2) / d;
    }
    case Node::Kind::Sin: return std::sin(eval(*n.lhs, x1, x2));
    case Node::Kind::Cos: return std::cos(eval(*n.lhs, x1, x2));
    case Node::Kind::Exp: return std::exp(eval(*n.lhs, x1, x2));
    case Node::Kind::Abs: return std::abs(eval(*n.lhs, x1, x2));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& source) {
  Parser p(source);
  Expression e;
  e.root_ = p.parse_all();
  e.uses_x2_ = p.uses_x2;
  e.source_ = source;
  return e;
}

double Expression::evaluate(double x1, double x2) const {
  const double v = eval(*root_, x1, x2);
  if (!std::isfinite(v)) throw ExpressionError("non-finite value at x1=" + std::to_string(x1), 0);
  return v;
}

}  // namespace biharm
