#include "weierlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace weierlab::expr {

enum class Op { num, var_x, var_y, var_z, var_zbar, add, sub, mul, div, pow, neg, call };
enum class Fn { exp, log, sin, cos, sqrt, abs, conj, re, im };

struct AstNode {
  Op op;
  cplx value{};
  Fn fn = Fn::exp;
  std::shared_ptr<const AstNode> a, b;
};

namespace {

using Ptr = std::shared_ptr<const AstNode>;

// Domain errors raised during evaluation; converted to SingularityError.
struct DomainError {
  std::string what;
};

Ptr leaf(Op op, cplx v = {}) { return std::make_shared<AstNode>(AstNode{op, v, Fn::exp, nullptr, nullptr}); }
Ptr binary(Op op, Ptr a, Ptr b) {
  return std::make_shared<AstNode>(AstNode{op, {}, Fn::exp, std::move(a), std::move(b)});
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Ptr parse() {
    skip();
    if (pos_ == s_.size()) fail("empty expression");
    Ptr e = expression();
    skip();
    if (pos_ != s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_ + 1); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Ptr expression() {
    Ptr lhs = term();
    for (;;) {
      if (accept('+')) lhs = binary(Op::add, lhs, term());
      else if (accept('-')) lhs = binary(Op::sub, lhs, term());
      else return lhs;
    }
  }

  Ptr term() {
    Ptr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = binary(Op::mul, lhs, unary());
      else if (accept('/')) lhs = binary(Op::div, lhs, unary());
      else return lhs;
    }
  }

  Ptr unary() {
    if (accept('-')) return binary(Op::neg, unary(), nullptr);
    if (accept('+')) return unary();
    return power();
  }

  Ptr power() {
    Ptr base = primary();
    if (accept('^')) return binary(Op::pow, base, unary());
    return base;
  }

  Ptr primary() {
    skip();
    if (pos_ == s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Ptr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  Ptr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    const std::string tok(s_.substr(start, pos_ - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) {
      pos_ = start;
      fail("malformed number '" + tok + "'");
    }
    return leaf(Op::num, v);
  }

  Ptr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id(s_.substr(start, pos_ - start));
    if (id == "x") return leaf(Op::var_x);
    if (id == "y") return leaf(Op::var_y);
    if (id == "z") return leaf(Op::var_z);
    if (id == "zbar") return leaf(Op::var_zbar);
    if (id == "i") return leaf(Op::num, cplx{0.0, 1.0});
    if (id == "pi") return leaf(Op::num, std::numbers::pi);
    static const std::vector<std::pair<std::string, Fn>> fns = {
        {"exp", Fn::exp},   {"log", Fn::log}, {"sin", Fn::sin},   {"cos", Fn::cos}, {"sqrt", Fn::sqrt},
        {"abs", Fn::abs},   {"conj", Fn::conj}, {"re", Fn::re},   {"im", Fn::im}};
    for (const auto& [name, fn] : fns) {
      if (id != name) continue;
      if (!accept('(')) fail("expected '(' after " + id);
      Ptr arg = expression();
      if (!accept(')')) fail("expected ')'");
      return std::make_shared<AstNode>(AstNode{Op::call, {}, fn, std::move(arg), nullptr});
    }
    pos_ = start;
    fail("unknown identifier '" + id + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

bool integer_exponent(cplx e, long& n) {
  if (e.imag() != 0.0 || std::abs(e.real()) > 64.0) return false;
  const double r = std::round(e.real());
  if (r != e.real()) return false;
  n = static_cast<long>(r);
  return true;
}

cplx ipow(cplx b, long n) {
  if (n < 0) {
    if (b == cplx{}) throw DomainError{"zero raised to a negative power"};
    return 1.0 / ipow(b, -n);
  }
  cplx r{1.0, 0.0};
  while (n > 0) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

cplx eval_node(const AstNode& n, cplx z) {
  switch (n.op) {
    case Op::num: return n.value;
    case Op::var_x: return z.real();
    case Op::var_y: return z.imag();
    case Op::var_z: return z;
    case Op::var_zbar: return std::conj(z);
    case Op::add: return eval_node(*n.a, z) + eval_node(*n.b, z);
    case Op::sub: return eval_node(*n.a, z) - eval_node(*n.b, z);
    case Op::mul: return eval_node(*n.a, z) * eval_node(*n.b, z);
    case Op::div: {
      const cplx d = eval_node(*n.b, z);
      if (d == cplx{}) throw DomainError{"division by zero"};
      return eval_node(*n.a, z) / d;
    }
    case Op::pow: {
      const cplx b = eval_node(*n.a, z), e = eval_node(*n.b, z);
      long k = 0;
      if (integer_exponent(e, k)) return ipow(b, k);
      if (b == cplx{}) {
        if (e.real() > 0.0) return {};
        throw DomainError{"zero raised to a non-positive power"};
      }
      return std::pow(b, e);
    }
    case Op::neg: return cplx{} - eval_node(*n.a, z);  // avoids a signed zero imaginary part
    case Op::call: {
      const cplx v = eval_node(*n.a, z);
      switch (n.fn) {
        case Fn::exp: return std::exp(v);
        case Fn::log:
          if (v == cplx{}) throw DomainError{"log of zero"};
          return std::log(v);
        case Fn::sin: return std::sin(v);
        case Fn::cos: return std::cos(v);
        case Fn::sqrt: return std::sqrt(v);
        case Fn::abs: return std::abs(v);
        case Fn::conj: return std::conj(v);
        case Fn::re: return v.real();
        case Fn::im: return v.imag();
      }
    }
  }
  return {};
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.source_ = std::string(text);
  e.root_ = Parser(text).parse();
  return e;
}

cplx Expression::eval(cplx z) const {
  try {
    const cplx v = eval_node(*root_, z);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError{"non-finite value"};
    return v;
  } catch (const DomainError& d) {
    throw SingularityError("expression '" + source_ + "': " + d.what);
  }
}

cgrid::ComplexField Expression::evaluate(const cgrid::Grid& g, std::string label) const {
  std::vector<cplx> v(g.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Node n = g.node(k);
    try {
      v[k] = eval_node(*root_, g.z(n));
    } catch (const DomainError& d) {
      throw SingularityError("expression '" + source_ + "': " + d.what, n);
    }
    if (!std::isfinite(v[k].real()) || !std::isfinite(v[k].imag())) {
      throw SingularityError("expression '" + source_ + "': non-finite value", n);
    }
  }
  return cgrid::ComplexField(g, std::move(v), label.empty() ? source_ : std::move(label));
}

}  // namespace weierlab::expr
