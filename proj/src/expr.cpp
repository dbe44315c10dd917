#include "blie/expr.hpp"

#include <cctype>
#include <unordered_map>

namespace blie {

namespace {

bool is_function_name(std::string_view s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "log";
}

}  // namespace

namespace detail {
void throw_domain(const char* what) { throw ExprError(ExprError::Kind::domain, what); }
}  // namespace detail

// ---------------------------------------------------------------------------
// construction

Expr::Expr(Rational c) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::constant;
  n->value = c;
  node_ = std::move(n);
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::variable;
  n->name = std::move(name);
  return Expr(std::shared_ptr<const ExprNode>(std::move(n)));
}

Expr Expr::make(ExprKind k, Expr a, Expr b, int exponent) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->exponent = exponent;
  return Expr(std::shared_ptr<const ExprNode>(std::move(n)));
}

const ExprNode& Expr::node() const {
  static const ExprNode zero{};
  return node_ ? *node_ : zero;
}

ExprKind Expr::kind() const { return node().kind; }
const std::string& Expr::name() const { return node().name; }
const Rational& Expr::value() const { return node().value; }
int Expr::exponent() const { return node().exponent; }
const Expr& Expr::lhs() const { return node().lhs; }
const Expr& Expr::rhs() const { return node().rhs; }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::make(ExprKind::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return Expr::make(ExprKind::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return Expr::make(ExprKind::mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero()) return Expr::make(ExprKind::div, a, b);  // kept; fails at evaluation
  if (a.is_constant() && b.is_constant()) return Expr(a.value() / b.value());
  if (b.is_one()) return a;
  if (a.is_zero()) return Expr();
  return Expr::make(ExprKind::div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.value());
  if (a.kind() == ExprKind::neg) return a.lhs();
  return Expr::make(ExprKind::neg, a);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr(1);
  if (exponent == 1) return base;
  if (base.is_constant() && !(base.is_zero() && exponent < 0)) {
    Rational r(1);
    Rational b = exponent < 0 ? Rational(1) / base.value() : base.value();
    for (int i = 0; i < std::abs(exponent); ++i) r *= b;
    return Expr(r);
  }
  return Expr::make(ExprKind::pow, base, Expr(), exponent);
}

Expr sin(const Expr& a) {
  if (a.is_zero()) return Expr();
  return Expr::make(ExprKind::sin, a);
}

Expr cos(const Expr& a) {
  if (a.is_zero()) return Expr(1);
  return Expr::make(ExprKind::cos, a);
}

Expr exp(const Expr& a) {
  if (a.is_zero()) return Expr(1);
  return Expr::make(ExprKind::exp, a);
}

Expr log(const Expr& a) {
  if (a.is_one()) return Expr();
  return Expr::make(ExprKind::log, a);
}

// ---------------------------------------------------------------------------
// parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::set<std::string, std::less<>>* allowed)
      : text_(text), allowed_(allowed) {}

  Expr run() {
    skip_ws();
    Expr e = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ExprError::Kind kind = ExprError::Kind::syntax) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ExprError(kind, msg + " at line " + std::to_string(line) + ", column " + std::to_string(col),
                    line, col);
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

  Expr expression() {
    Expr e = term();
    for (;;) {
      if (accept('+')) {
        e = e + term();
      } else if (accept('-')) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) {
        e = e * unary();
      } else if (accept('/')) {
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) {
      skip_ws();
      bool neg = false;
      if (pos_ < text_.size() && text_[pos_] == '-') {
        neg = true;
        ++pos_;
        skip_ws();
      }
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      if (pos_ - start > 6) fail("exponent too large");
      int n = std::stoi(std::string(text_.substr(start, pos_ - start)));
      return pow(base, neg ? -n : n);
    }
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
        ++pos_;
      try {
        return Expr(Rational::parse(text_.substr(start, pos_ - start)));
      } catch (const std::exception&) {
        pos_ = start;
        fail("malformed number");
      }
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string id(text_.substr(start, pos_ - start));
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        if (!is_function_name(id)) {
          pos_ = start;
          fail("unknown function '" + id + "'", ExprError::Kind::unknown_identifier);
        }
        ++pos_;
        Expr arg = expression();
        expect(')');
        if (id == "sin") return sin(arg);
        if (id == "cos") return cos(arg);
        if (id == "exp") return exp(arg);
        return log(arg);
      }
      if (is_function_name(id)) {
        pos_ = start;
        fail("function '" + id + "' used without argument");
      }
      if (allowed_ && !allowed_->contains(id)) {
        pos_ = start;
        fail("unknown identifier '" + id + "'", ExprError::Kind::unknown_identifier);
      }
      return Expr::variable(id);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  const std::set<std::string, std::less<>>* allowed_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text, nullptr).run(); }

Expr parse(std::string_view text, const std::set<std::string, std::less<>>& allowed) {
  return Parser(text, &allowed).run();
}

// ---------------------------------------------------------------------------
// printing

namespace {

int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::add:
    case ExprKind::sub: return 1;
    case ExprKind::mul:
    case ExprKind::div: return 2;
    case ExprKind::neg: return 3;
    case ExprKind::pow: return 4;
    default: return 5;
  }
}

void print_to(const Expr& e, std::string& out);

void print_child(const Expr& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_to(child, out);
  if (parens) out += ')';
}

void print_to(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::variable: out += e.name(); return;
    case ExprKind::constant: {
      const Rational& v = e.value();
      if (v.is_integer() && v.num() >= 0) {
        out += v.str();
      } else {
        out += '(';
        out += v.str();
        out += ')';
      }
      return;
    }
    case ExprKind::add:
    case ExprKind::sub:
    case ExprKind::mul:
    case ExprKind::div: {
      int p = precedence(e);
      print_child(e.lhs(), precedence(e.lhs()) < p, out);
      out += e.kind() == ExprKind::add   ? "+"
             : e.kind() == ExprKind::sub ? "-"
             : e.kind() == ExprKind::mul ? "*"
                                         : "/";
      print_child(e.rhs(), precedence(e.rhs()) <= p, out);
      return;
    }
    case ExprKind::neg:
      out += '-';
      print_child(e.lhs(), precedence(e.lhs()) < 3, out);
      return;
    case ExprKind::pow:
      print_child(e.lhs(), precedence(e.lhs()) < 5, out);
      out += '^';
      out += std::to_string(e.exponent());
      return;
    case ExprKind::sin:
    case ExprKind::cos:
    case ExprKind::exp:
    case ExprKind::log:
      out += e.kind() == ExprKind::sin   ? "sin("
             : e.kind() == ExprKind::cos ? "cos("
             : e.kind() == ExprKind::exp ? "exp("
                                         : "log(";
      print_to(e.lhs(), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print_to(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// evaluation, differentiation, substitution

double eval(const Expr& e, const Environment& env) {
  switch (e.kind()) {
    case ExprKind::variable: {
      auto it = env.find(e.name());
      if (it == env.end())
        throw ExprError(ExprError::Kind::unbound_variable, "unbound variable '" + e.name() + "'");
      return it->second;
    }
    case ExprKind::constant: return e.value().to_double();
    case ExprKind::add: return eval(e.lhs(), env) + eval(e.rhs(), env);
    case ExprKind::sub: return eval(e.lhs(), env) - eval(e.rhs(), env);
    case ExprKind::mul: return eval(e.lhs(), env) * eval(e.rhs(), env);
    case ExprKind::div: {
      double num = eval(e.lhs(), env);
      double den = eval(e.rhs(), env);
      if (den == 0.0) detail::throw_domain("division by zero");
      return num / den;
    }
    case ExprKind::neg: return -eval(e.lhs(), env);
    case ExprKind::pow: return detail::int_power(eval(e.lhs(), env), e.exponent());
    case ExprKind::sin: return std::sin(eval(e.lhs(), env));
    case ExprKind::cos: return std::cos(eval(e.lhs(), env));
    case ExprKind::exp: return std::exp(eval(e.lhs(), env));
    case ExprKind::log: {
      double a = eval(e.lhs(), env);
      if (!(a > 0.0)) detail::throw_domain("log of non-positive value");
      return std::log(a);
    }
  }
  return 0.0;
}

Expr diff(const Expr& e, std::string_view var) {
  switch (e.kind()) {
    case ExprKind::variable: return e.name() == var ? Expr(1) : Expr();
    case ExprKind::constant: return Expr();
    case ExprKind::add: return diff(e.lhs(), var) + diff(e.rhs(), var);
    case ExprKind::sub: return diff(e.lhs(), var) - diff(e.rhs(), var);
    case ExprKind::mul: return diff(e.lhs(), var) * e.rhs() + e.lhs() * diff(e.rhs(), var);
    case ExprKind::div: {
      Expr da = diff(e.lhs(), var);
      Expr db = diff(e.rhs(), var);
      if (db.is_zero()) return da / e.rhs();
      return (da * e.rhs() - e.lhs() * db) / pow(e.rhs(), 2);
    }
    case ExprKind::neg: return -diff(e.lhs(), var);
    case ExprKind::pow:
      return Expr(e.exponent()) * pow(e.lhs(), e.exponent() - 1) * diff(e.lhs(), var);
    case ExprKind::sin: return cos(e.lhs()) * diff(e.lhs(), var);
    case ExprKind::cos: return -(sin(e.lhs()) * diff(e.lhs(), var));
    case ExprKind::exp: return e * diff(e.lhs(), var);
    case ExprKind::log: return diff(e.lhs(), var) / e.lhs();
  }
  return Expr();
}

namespace {
void collect_vars(const Expr& e, std::set<std::string, std::less<>>& out) {
  switch (e.kind()) {
    case ExprKind::variable: out.insert(e.name()); return;
    case ExprKind::constant: return;
    case ExprKind::add:
    case ExprKind::sub:
    case ExprKind::mul:
    case ExprKind::div:
      collect_vars(e.lhs(), out);
      collect_vars(e.rhs(), out);
      return;
    default: collect_vars(e.lhs(), out); return;
  }
}
}  // namespace

std::set<std::string, std::less<>> free_variables(const Expr& e) {
  std::set<std::string, std::less<>> out;
  collect_vars(e, out);
  return out;
}

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& rep) {
  switch (e.kind()) {
    case ExprKind::variable: {
      auto it = rep.find(e.name());
      return it == rep.end() ? e : it->second;
    }
    case ExprKind::constant: return e;
    case ExprKind::add: return substitute(e.lhs(), rep) + substitute(e.rhs(), rep);
    case ExprKind::sub: return substitute(e.lhs(), rep) - substitute(e.rhs(), rep);
    case ExprKind::mul: return substitute(e.lhs(), rep) * substitute(e.rhs(), rep);
    case ExprKind::div: return substitute(e.lhs(), rep) / substitute(e.rhs(), rep);
    case ExprKind::neg: return -substitute(e.lhs(), rep);
    case ExprKind::pow: return pow(substitute(e.lhs(), rep), e.exponent());
    case ExprKind::sin: return sin(substitute(e.lhs(), rep));
    case ExprKind::cos: return cos(substitute(e.lhs(), rep));
    case ExprKind::exp: return exp(substitute(e.lhs(), rep));
    case ExprKind::log: return log(substitute(e.lhs(), rep));
  }
  return e;
}

bool same_tree(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::variable: return a.name() == b.name();
    case ExprKind::constant: return a.value() == b.value();
    case ExprKind::add:
    case ExprKind::sub:
    case ExprKind::mul:
    case ExprKind::div: return same_tree(a.lhs(), b.lhs()) && same_tree(a.rhs(), b.rhs());
    case ExprKind::pow: return a.exponent() == b.exponent() && same_tree(a.lhs(), b.lhs());
    default: return same_tree(a.lhs(), b.lhs());
  }
}

// ---------------------------------------------------------------------------
// compiled tapes

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> variables) {
  std::unordered_map<const void*, int> seen;
  auto var_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == name) return static_cast<int>(i);
    throw ExprError(ExprError::Kind::unbound_variable, "unbound variable '" + name + "'");
  };
  auto emit = [&](auto&& self, const Expr& x) -> int {
    if (auto it = seen.find(x.id()); it != seen.end()) return it->second;
    Instr in{x.kind()};
    switch (x.kind()) {
      case ExprKind::variable: in.n = var_index(x.name()); break;
      case ExprKind::constant: in.c = x.value().to_double(); break;
      case ExprKind::add:
      case ExprKind::sub:
      case ExprKind::mul:
      case ExprKind::div:
        in.a = self(self, x.lhs());
        in.b = self(self, x.rhs());
        break;
      case ExprKind::pow:
        in.a = self(self, x.lhs());
        in.n = x.exponent();
        break;
      default: in.a = self(self, x.lhs()); break;
    }
    code_.push_back(in);
    int idx = static_cast<int>(code_.size()) - 1;
    seen.emplace(x.id(), idx);
    return idx;
  };
  emit(emit, e);
}

// ---------------------------------------------------------------------------
// polynomials

Polynomial Polynomial::constant(std::size_t nvars, const Rational& c) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
  Polynomial p(nvars);
  Monomial m(nvars, 0);
  m[index] = 1;
  p.add_term(m, Rational(1));
  return p;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  Polynomial r = a;
  for (const auto& [m, c] : b.terms_) r.add_term(m, c);
  return r;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial Polynomial::operator-() const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
  return r;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r(a.nvars_);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      Polynomial::Monomial m(ma.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
      r.add_term(m, ca * cb);
    }
  }
  return r;
}

Rational Polynomial::at(std::span<const Rational> point) const {
  Rational sum;
  for (const auto& [m, c] : terms_) {
    Rational t = c;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (int k = 0; k < m[i]; ++k) t *= point[i];
    sum += t;
  }
  return sum;
}

Polynomial to_polynomial(const Expr& e, std::span<const std::string> variables) {
  const std::size_t n = variables.size();
  switch (e.kind()) {
    case ExprKind::variable:
      for (std::size_t i = 0; i < n; ++i)
        if (variables[i] == e.name()) return Polynomial::variable(n, i);
      throw std::invalid_argument("variable '" + e.name() + "' not in polynomial variable list");
    case ExprKind::constant: return Polynomial::constant(n, e.value());
    case ExprKind::add: return to_polynomial(e.lhs(), variables) + to_polynomial(e.rhs(), variables);
    case ExprKind::sub: return to_polynomial(e.lhs(), variables) - to_polynomial(e.rhs(), variables);
    case ExprKind::mul: return to_polynomial(e.lhs(), variables) * to_polynomial(e.rhs(), variables);
    case ExprKind::div:
      if (!e.rhs().is_constant() || e.rhs().is_zero())
        throw std::invalid_argument("division by a non-constant is not polynomial");
      return to_polynomial(e.lhs(), variables) * Polynomial::constant(n, Rational(1) / e.rhs().value());
    case ExprKind::neg: return -to_polynomial(e.lhs(), variables);
    case ExprKind::pow: {
      if (e.exponent() < 0) throw std::invalid_argument("negative power is not polynomial");
      Polynomial base = to_polynomial(e.lhs(), variables);
      Polynomial r = Polynomial::constant(n, Rational(1));
      for (int k = 0; k < e.exponent(); ++k) r = r * base;
      return r;
    }
    default: throw std::invalid_argument("transcendental function is not polynomial");
  }
}

}  // namespace blie
