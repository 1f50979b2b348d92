#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracgb {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A bound was requested for data that violates the hypotheses of the
/// inequality (sign, monotonicity or boundedness of a, b, g).
class HypothesisError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Iterative evaluation stopped before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two sampled objects live on different time or space grids.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure tied to a specific time node (singular implicit step,
/// non-finite state, CFL violation, mass drift).
class NodeError : public std::runtime_error {
 public:
  NodeError(const std::string& what, std::size_t node)
      : std::runtime_error(what + " (node " + std::to_string(node) + ")"), node_(node) {}

  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

}  // namespace fracgb
