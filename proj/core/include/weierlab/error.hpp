#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace weierlab {

/// Grid node coordinates (i along x, j along y).
struct Node {
  std::size_t i = 0;
  std::size_t j = 0;
  friend bool operator==(const Node&, const Node&) = default;
};

std::string to_string(const Node& n);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad grid, bad stencil order, missing inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Expression parse failure; column is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t column)
      : Error(msg + " at column " + std::to_string(column)), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// A quantity is singular or undefined at a grid node (division by a
/// vanishing denominator, log of zero, non-finite value).
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, std::optional<Node> node = std::nullopt)
      : Error(node ? what + " at node " + to_string(*node) : what), node_(node) {}
  const std::optional<Node>& node() const noexcept { return node_; }

 private:
  std::optional<Node> node_;
};

/// Square-root branch point or branch-cut crossing on the grid.
class BranchError : public SingularityError {
 public:
  using SingularityError::SingularityError;
};

/// Spectral parameter places a pole of the Lax matrices on the grid.
class SpectralParameterError : public SingularityError {
 public:
  using SingularityError::SingularityError;
};

/// Input that should be harmonic (or closed) is not, within tolerance.
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace weierlab
