#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

namespace biharm {

/// Parse or evaluation failure; `position()` is a 0-based column into the source.
class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& msg, std::size_t position)
      : std::invalid_argument(msg + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Compiled coefficient expression.
///
///   expr    := term { ("+" | "-") term }
///   term    := unary { ("*" | "/") unary }
///   unary   := ("+" | "-") unary | primary
///   primary := number | "x1" | "x2" | "pi"
///            | ("sin" | "cos" | "exp" | "abs") "(" expr ")"
///            | "(" expr ")"
///   number  := digits [ "." digits ] [ ("e" | "E") [sign] digits ]
class Expression {
 public:
  struct Node;

  static Expression parse(const std::string& source);

  /// Throws ExpressionError on division by zero or a non-finite value.
  double evaluate(double x1, double x2) const;
  bool uses_x2() const { return uses_x2_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
  bool uses_x2_ = false;
};

}  // namespace biharm
