#pragma once

#include <stdexcept>
#include <string>

namespace biharm {

/// An existence hypothesis (h < 0, integral of f^- > 0, q range, ...) does not hold.
class HypothesisViolated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite energies or iterates.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The mu-curve lacks the negative-min / positive-hump / negative shape.
class ShapeNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mountain-pass path maximum fell to the endpoint level.
class Collapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An a priori norm bound failed along the continuation.
class DivergingNorms : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Constraint set empty on the grid.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveEps0 : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadSigma : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace biharm
