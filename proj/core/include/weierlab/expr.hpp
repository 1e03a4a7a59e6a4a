#pragma once

// Small complex expression language for field specifications.
//
//   variables  x y z zbar i pi
//   operators  + - * / ^ (right associative) and unary -
//   functions  exp log sin cos sqrt abs conj re im
//
// Integer exponents are evaluated by repeated multiplication so that
// polynomials are exact.

#include <memory>
#include <string>
#include <string_view>

#include "weierlab/cgrid.hpp"

namespace weierlab::expr {

struct AstNode;

class Expression {
 public:
  /// Throws ParseError with the 1-based column of the offending token.
  static Expression parse(std::string_view text);

  /// Value at the point z. Throws SingularityError on domain errors.
  cplx eval(cplx z) const;
  /// Values on every node; domain errors name the node.
  cgrid::ComplexField evaluate(const cgrid::Grid& g, std::string label = {}) const;

  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::shared_ptr<const AstNode> root_;
};

inline cgrid::ComplexField evaluate(std::string_view text, const cgrid::Grid& g) {
  return Expression::parse(text).evaluate(g, std::string(text));
}

}  // namespace weierlab::expr
