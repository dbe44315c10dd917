#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "blie/expr.hpp"
#include "support/random_expr.hpp"

using namespace blie;

namespace {
double central_difference(const Expr& e, Environment env, const std::string& var, double h) {
  double x = env[var];
  env[var] = x + h;
  double fp = eval(e, env);
  env[var] = x - h;
  double fm = eval(e, env);
  return (fp - fm) / (2.0 * h);
}
}  // namespace

TEST_CASE("parse builds the expected trees") {
  Expr e = parse("x*y + sin(x)");
  REQUIRE(e.kind() == ExprKind::add);
  CHECK(e.lhs().kind() == ExprKind::mul);
  CHECK(e.lhs().lhs().name() == "x");
  CHECK(e.lhs().rhs().name() == "y");
  CHECK(e.rhs().kind() == ExprKind::sin);
  CHECK(e.rhs().lhs().name() == "x");

  Expr l = parse("log(y1)");
  REQUIRE(l.kind() == ExprKind::log);
  CHECK(l.lhs().name() == "y1");
}

TEST_CASE("division by zero parses but fails at evaluation") {
  Expr e = parse("1/0");
  CHECK(e.kind() == ExprKind::div);
  try {
    eval(e, {{"x", 1.0}});
    FAIL("expected domain error");
  } catch (const ExprError& err) {
    CHECK(err.kind() == ExprError::Kind::domain);
  }
  CHECK_THROWS_AS(eval(parse("log(x)"), {{"x", 0.0}}), ExprError);
  CHECK_THROWS_AS(eval(parse("log(x)"), {{"x", -2.0}}), ExprError);
}

TEST_CASE("eval examples") {
  CHECK(eval(parse("x*y"), {{"x", 2.0}, {"y", 3.0}}) == 6.0);
  CHECK(eval(parse("sin(x)"), {{"x", 0.0}}) == 0.0);
  CHECK(eval(parse("exp(log(x))"), {{"x", 2.5}}) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(eval(parse("x^-2"), {{"x", 2.0}}) == 0.25);
  CHECK(eval(parse("0.125*x"), {{"x", 8.0}}) == 1.0);
}

TEST_CASE("unbound variable is reported") {
  try {
    eval(parse("x+z"), {{"x", 1.0}});
    FAIL("expected unbound variable");
  } catch (const ExprError& err) {
    CHECK(err.kind() == ExprError::Kind::unbound_variable);
  }
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse("x +\n  (y * )");
    FAIL("expected syntax error");
  } catch (const ExprError& err) {
    CHECK(err.kind() == ExprError::Kind::syntax);
    CHECK(err.line() == 2);
    CHECK(err.column() == 8);
  }
  try {
    parse("tan(x)");
    FAIL("expected unknown identifier");
  } catch (const ExprError& err) {
    CHECK(err.kind() == ExprError::Kind::unknown_identifier);
    CHECK(err.column() == 1);
  }
  try {
    parse("x + w", {"x", "y"});
    FAIL("expected unknown identifier");
  } catch (const ExprError& err) {
    CHECK(err.kind() == ExprError::Kind::unknown_identifier);
    CHECK(err.column() == 5);
  }
  CHECK_THROWS_AS(parse("x^y"), ExprError);
  CHECK_THROWS_AS(parse("(x"), ExprError);
  CHECK_THROWS_AS(parse(""), ExprError);
}

TEST_CASE("differentiation examples") {
  CHECK(to_string(diff(parse("x^2"), "x")) == "2*x");
  CHECK(to_string(diff(parse("log(y1)"), "y1")) == "1/y1");
  CHECK(diff(parse("3*sin(2)"), "x").is_zero());

  Expr e = parse("sin(x)*y");
  Environment env{{"x", 0.3}, {"y", 2.0}};
  double exact = eval(diff(e, "x"), env);
  double fd = central_difference(e, env, "x", 1e-5);
  CHECK(std::abs(exact - fd) <= 1e-8 * std::abs(exact));
}

TEST_CASE("folding is limited to constants and 0/1 absorption") {
  CHECK(to_string(parse("0*x + 1*y")) == "y");
  CHECK(to_string(parse("x/1 - 0")) == "x");
  CHECK(to_string(parse("2*3 + x")) == "6+x");
  CHECK(to_string(parse("x + x")) == "x+x");
  CHECK(to_string(parse("1/2*x")) == "(1/2)*x");
  CHECK(to_string(parse("-(-x)")) == "x");
}

TEST_CASE("printing round-trips through the parser") {
  const char* cases[] = {"a-(b-c)", "a/(b*c)", "-(a+b)*c", "(-x)^2", "(x^2)^3", "x^-1", "a*-b",
                         "exp(-x)/(1+y)", "(1/3)*x-(-2)", "log(x)*cos(y)^2"};
  for (const char* c : cases) {
    Expr e = parse(c);
    std::string once = to_string(e);
    Expr back = parse(once);
    CHECK(same_tree(e, back));
    CHECK(to_string(back) == once);
  }

  testing::ExprGenerator gen({"x", "y", "z"}, 7);
  for (int i = 0; i < 300; ++i) {
    Expr e = gen.any(4);
    std::string once = to_string(e);
    Expr back = parse(once);
    CHECK_MESSAGE(same_tree(e, back), once);
    CHECK(to_string(back) == once);
  }
}

TEST_CASE("compiled tapes agree with tree evaluation, also on jets") {
  std::vector<std::string> vars{"x", "y"};
  Expr e = parse("sin(x)*y + exp(x*y)/(1+y^2) - log(2+x)");
  CompiledExpr c(e, vars);
  Environment env{{"x", 0.4}, {"y", -1.3}};
  Eigen::VectorXd p(2);
  p << 0.4, -1.3;
  CHECK(c(p) == doctest::Approx(eval(e, env)).epsilon(1e-14));

  VectorX<Jet> jp(2);
  jp(0) = make_jet(0.4, 2, 0, 1.0);
  jp(1) = make_jet(-1.3, 2, 1, 1.0);
  Jet j = c(jp);
  CHECK(j.value() == doctest::Approx(eval(e, env)).epsilon(1e-14));
  CHECK(j.derivatives()(0) == doctest::Approx(eval(diff(e, "x"), env)).epsilon(1e-13));
  CHECK(j.derivatives()(1) == doctest::Approx(eval(diff(e, "y"), env)).epsilon(1e-13));
}

TEST_CASE("property: exact derivative matches central differences") {
  testing::ExprGenerator gen({"x", "y", "z"}, 20240917);
  const double h = 1e-5;
  int checked = 0;
  int attempts = 0;
  while (checked < 1000 && attempts < 200000) {
    ++attempts;
    Expr e = gen.any(3);
    Environment env{{"x", gen.uniform(-1.5, 1.5)}, {"y", gen.uniform(-1.5, 1.5)}, {"z", gen.uniform(-1.5, 1.5)}};
    std::string var = std::vector<std::string>{"x", "y", "z"}[checked % 3];
    Expr d = diff(e, var);
    bool ok = true;
    for (double shift : {-h, 0.0, h}) {
      Environment probe = env;
      probe[var] += shift;
      ok = ok && testing::well_conditioned(e, probe, 0.1, 1e6) && testing::well_conditioned(d, probe, 0.1, 1e6);
    }
    if (!ok) continue;
    double exact = eval(d, env);
    double fd = central_difference(e, env, var, h);
    CHECK_MESSAGE(std::abs(exact - fd) <= 1e-6 * (1.0 + std::abs(exact)), to_string(e), " d/d", var);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("polynomial expansion is exact") {
  std::vector<std::string> vars{"x", "y"};
  Polynomial a = to_polynomial(parse("(x+y)^2 - x^2 - 2*x*y - y^2"), vars);
  CHECK(a.is_zero());
  Polynomial b = to_polynomial(parse("(x - 1/2)*(x + 1/2)"), vars);
  Polynomial c = to_polynomial(parse("x^2 - 1/4"), vars);
  CHECK(b == c);
  CHECK_THROWS_AS(to_polynomial(parse("sin(x)"), vars), std::invalid_argument);
  CHECK_THROWS_AS(to_polynomial(parse("1/x"), vars), std::invalid_argument);
  std::vector<Rational> pt{Rational(1, 3), Rational(2)};
  CHECK(to_polynomial(parse("3*x*y + y"), vars).at(pt) == Rational(4));
}

TEST_CASE("rationals") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -3).num() == -1);
  CHECK(Rational::parse("0.125") == Rational(1, 8));
  CHECK(Rational::parse("-7/21") == Rational(-1, 3));
  CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
  CHECK_THROWS_AS(Rational(INT64_MAX) * Rational(4), std::overflow_error);
}
