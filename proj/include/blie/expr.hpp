#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blie/rational.hpp"
#include "blie/scalar.hpp"

namespace blie {

enum class ExprKind { variable, constant, add, sub, mul, div, neg, pow, sin, cos, exp, log };

class ExprError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_identifier, unbound_variable, domain };

  ExprError(Kind kind, const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), kind_(kind), line_(line), column_(column) {}

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

struct ExprNode;

/// Immutable scalar expression over the closed grammar
///   variable | rational | + | - | * | / | unary - | ^int | sin | cos | exp | log.
///
/// Construction goes through folding constructors that perform constant
/// folding and 0/1 absorption only; no other simplification is attempted.
/// Values share structure, so copies are cheap and thread-safe to read.
class Expr {
 public:
  Expr() = default;  // the constant 0
  Expr(Rational c);  // NOLINT
  Expr(int c) : Expr(Rational(c)) {}  // NOLINT

  static Expr variable(std::string name);
  static Expr constant(Rational c) { return Expr(c); }

  ExprKind kind() const;
  const std::string& name() const;  // variable nodes
  const Rational& value() const;    // constant nodes
  int exponent() const;             // pow nodes
  const Expr& lhs() const;          // unary and binary nodes
  const Expr& rhs() const;          // binary nodes

  bool is_constant() const { return kind() == ExprKind::constant; }
  bool is_zero() const { return is_constant() && value().is_zero(); }
  bool is_one() const { return is_constant() && value().is_one(); }

  // Identity of the underlying node (used for tape memoization).
  const void* id() const { return &node(); }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, int exponent);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);

  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  static Expr make(ExprKind k, Expr a, Expr b = Expr(), int exponent = 0);
  const ExprNode& node() const;

  // Null means the constant 0.
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  ExprKind kind = ExprKind::constant;
  std::string name;
  Rational value;
  int exponent = 0;
  Expr lhs;
  Expr rhs;
};

using Environment = std::map<std::string, double, std::less<>>;

/// Parses infix text. Identifiers followed by '(' must be one of
/// sin/cos/exp/log; any other identifier is a variable.
Expr parse(std::string_view text);

/// As above, but every variable must belong to `allowed`; others raise
/// ExprError::Kind::unknown_identifier.
Expr parse(std::string_view text, const std::set<std::string, std::less<>>& allowed);

/// Canonical printed form; parse(to_string(e)) rebuilds the same tree.
std::string to_string(const Expr& e);

double eval(const Expr& e, const Environment& env);

/// Exact symbolic derivative.
Expr diff(const Expr& e, std::string_view var);

std::set<std::string, std::less<>> free_variables(const Expr& e);

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements);

/// Structural equality of trees.
bool same_tree(const Expr& a, const Expr& b);

namespace detail {
[[noreturn]] void throw_domain(const char* what);

template <typename Scalar>
Scalar int_power(const Scalar& x, int n) {
  if (n < 0) {
    if (value_of(x) == 0.0) throw_domain("division by zero in negative power");
    return Scalar(1.0) / int_power(x, -n);
  }
  Scalar result(1.0);
  Scalar base = x;
  while (n > 0) {
    if (n & 1) result = result * base;
    base = base * base;
    n >>= 1;
  }
  return result;
}
}  // namespace detail

/// Expr flattened to a register tape over an indexed variable list. Shared
/// subtrees are evaluated once. Evaluable for double and Jet.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::span<const std::string> variables);

  template <typename Scalar>
  Scalar operator()(std::span<const Scalar> x) const;

  template <typename Scalar>
  Scalar operator()(const VectorX<Scalar>& x) const {
    return (*this)(std::span<const Scalar>(x.data(), static_cast<std::size_t>(x.size())));
  }

  bool is_constant() const { return code_.size() == 1 && code_[0].kind == ExprKind::constant; }

 private:
  struct Instr {
    ExprKind kind;
    int a = -1;
    int b = -1;
    int n = 0;  // variable index or exponent
    double c = 0.0;
  };
  std::vector<Instr> code_;
};

template <typename Scalar>
Scalar CompiledExpr::operator()(std::span<const Scalar> x) const {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  std::vector<Scalar> r(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& in = code_[i];
    switch (in.kind) {
      case ExprKind::variable: r[i] = x[static_cast<std::size_t>(in.n)]; break;
      case ExprKind::constant: r[i] = Scalar(in.c); break;
      case ExprKind::add: r[i] = r[in.a] + r[in.b]; break;
      case ExprKind::sub: r[i] = r[in.a] - r[in.b]; break;
      case ExprKind::mul: r[i] = r[in.a] * r[in.b]; break;
      case ExprKind::div:
        if (value_of(r[in.b]) == 0.0) detail::throw_domain("division by zero");
        r[i] = r[in.a] / r[in.b];
        break;
      case ExprKind::neg: r[i] = -r[in.a]; break;
      case ExprKind::pow: r[i] = detail::int_power(r[in.a], in.n); break;
      case ExprKind::sin: r[i] = sin(r[in.a]); break;
      case ExprKind::cos: r[i] = cos(r[in.a]); break;
      case ExprKind::exp: r[i] = exp(r[in.a]); break;
      case ExprKind::log:
        if (!(value_of(r[in.a]) > 0.0)) detail::throw_domain("log of non-positive value");
        r[i] = log(r[in.a]);
        break;
    }
  }
  return r.back();
}

/// Multivariate polynomial with exact rational coefficients, keyed by
/// exponent vectors over a fixed variable list.
class Polynomial {
 public:
  using Monomial = std::vector<int>;

  explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, const Rational& c);
  static Polynomial variable(std::size_t nvars, std::size_t index);

  bool is_zero() const { return terms_.empty(); }
  const std::map<Monomial, Rational>& terms() const { return terms_; }
  std::size_t nvars() const { return nvars_; }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial operator-() const;
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

  // Evaluates exactly at a rational point.
  Rational at(std::span<const Rational> point) const;

 private:
  void add_term(const Monomial& m, const Rational& c);

  std::size_t nvars_;
  std::map<Monomial, Rational> terms_;
};

/// Expands a polynomial Expr (+, -, *, nonnegative powers, division by
/// constants). Throws std::invalid_argument for anything else.
Polynomial to_polynomial(const Expr& e, std::span<const std::string> variables);

}  // namespace blie
