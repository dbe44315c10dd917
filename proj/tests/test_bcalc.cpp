#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "blie/bcalc.hpp"
#include "support/random_expr.hpp"

using namespace blie;

namespace {

// Pfaffian by expansion along the first row.
double pfaffian_bruteforce(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 1.0;
  if (n % 2 == 1) return 0.0;
  double s = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 1; k < n; ++k)
      if (k != j) keep.push_back(k);
    Eigen::MatrixXd m(n - 2, n - 2);
    for (Eigen::Index r = 0; r < n - 2; ++r)
      for (Eigen::Index c = 0; c < n - 2; ++c) m(r, c) = a(keep[r], keep[c]);
    double sign = (j % 2 == 1) ? 1.0 : -1.0;
    s += sign * a(0, j) * pfaffian_bruteforce(m);
  }
  return s;
}

bool polynomially_zero(const Expr& e, const std::vector<std::string>& vars) {
  return to_polynomial(e, vars).is_zero();
}

BForm random_form(const BChart& chart, int degree, testing::ExprGenerator& gen, int coeff_degree) {
  BForm out(chart, degree);
  const int n = chart.dim();
  std::vector<MultiIndex> all;
  MultiIndex cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == degree) {
      all.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  for (const auto& idx : all) out.set(idx, gen.polynomial(coeff_degree));
  return out;
}

// Classical exterior derivative of a coordinate form, componentwise.
std::map<MultiIndex, Expr> classical_d(const std::map<MultiIndex, Expr>& beta, const std::vector<std::string>& vars) {
  std::map<MultiIndex, Expr> out;
  for (const auto& [idx, w] : beta)
    for (int j = 0; j < static_cast<int>(vars.size()); ++j) {
      MultiIndex full{j};
      full.insert(full.end(), idx.begin(), idx.end());
      int s = sort_sign(full);
      if (s == 0) continue;
      Expr d = diff(w, vars[j]);
      out[full] = out[full] + (s > 0 ? d : -d);
    }
  return out;
}

}  // namespace

TEST_CASE("pairing with the b-frame") {
  BChart chart({"f", "z2"}, 0);
  BForm dlog = BForm::coframe(chart, 0);
  for (double f : {0.0, 0.3, -1.0}) {
    Environment env{{"f", f}, {"z2", 0.7}};
    std::vector<BVectorField> e0{BVectorField::frame(chart, 0)};
    std::vector<BVectorField> e1{BVectorField::frame(chart, 1)};
    CHECK(pair(dlog, e0, env) == 1.0);
    CHECK(pair(dlog, e1, env) == 0.0);
  }

  BForm w = bdarboux_model(1);
  const BChart& dc = w.chart();
  std::vector<BVectorField> v{BVectorField::frame(dc, 0), BVectorField::frame(dc, 1)};
  for (double y : {0.0, 0.5}) {
    Environment env{{"x1", 0.2}, {"y1", y}};
    CHECK(pair(w, v, env) == 1.0);
    std::vector<BVectorField> swapped{v[1], v[0]};
    CHECK(pair(w, swapped, env) == -1.0);
  }
}

TEST_CASE("b_d examples") {
  for (int n = 1; n <= 3; ++n) CHECK(b_d(bdarboux_model(n)).is_zero());

  BChart chart({"y1", "p"}, 0);
  BForm alpha = BForm::function(chart, parse("p"));
  BForm w = BForm::from_alpha_beta(alpha, BForm(chart, 1));  // p dy1/y1
  CHECK(to_string(w.component({0})) == "p");
  BForm dw = b_d(w);
  // dp ^ dy1/y1 = -(dy1/y1 ^ dp)
  CHECK(to_string(dw.component({1, 0})) == "1");
  CHECK(dw.component({0, 1}).is_constant());
  CHECK(dw.component({0, 1}).value() == Rational(-1));

  BChart c3({"f", "z2", "z3"}, 0);
  BForm beta = BForm::from_coordinate_components(c3, 1, {{{2}, parse("z2")}});
  BForm d = b_d(beta);
  CHECK(d.components().size() == 1);
  CHECK(to_string(d.component({1, 2})) == "1");
}

TEST_CASE("d of b-functions") {
  BChart chart({"x", "y1"}, 1);
  BForm d1 = d_bfunction({chart, Rational(1), Expr()});
  CHECK(d1.components().size() == 1);
  CHECK(to_string(d1.component({1})) == "1");
  CHECK(d_bfunction({chart, Rational(0), Expr(Rational(7, 3))}).is_zero());

  BForm d2 = d_bfunction({chart, Rational(2), parse("x^2")});
  CHECK(to_string(d2.component({1})) == "2");
  CHECK(to_string(d2.component({0})) == "2*x");

  BFunction u{chart, Rational(2), parse("x^2")};
  CHECK(u({{"x", 1.0}, {"y1", std::exp(1.0)}}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(u({{"x", 1.0}, {"y1", 0.0}}), BCalcError);

  // the smooth part g = y1^2 picks up f d/df g = 2 y1^2 in the df/f slot
  BForm d3 = d_bfunction({chart, Rational(0), parse("y1^2")});
  Environment env{{"x", 0.0}, {"y1", 0.5}};
  CHECK(eval(d3.component({1}), env) == doctest::Approx(0.5));
}

TEST_CASE("coefficients must be smooth on Z") {
  BChart chart({"x", "y1"}, 1);
  BForm w(chart, 1);
  CHECK_THROWS_AS(w.set({0}, parse("1/y1")), BCalcError);
  CHECK_THROWS_AS(w.set({0}, parse("log(y1)")), BCalcError);
  CHECK_THROWS_AS(w.set({0}, parse("x*y1^-2")), BCalcError);
  CHECK_THROWS_AS(w.set({0}, parse("q")), BCalcError);
  CHECK_NOTHROW(w.set({0}, parse("1/(1+y1^2) + log(2+x)")));
}

TEST_CASE("property: d of d vanishes exactly") {
  BChart chart({"u", "f", "v", "w"}, 1);
  testing::ExprGenerator gen(chart.coords(), 1234);
  int checked = 0;
  for (int degree : {0, 1, 2}) {
    for (int s = 0; s < 100; ++s) {
      BForm w = random_form(chart, degree, gen, 3);
      BForm dd = b_d(b_d(w));
      for (const auto& [idx, c] : dd.components()) CHECK(polynomially_zero(c, chart.coords()));
      if (degree > 0) ++checked;
    }
  }
  CHECK(checked == 200);
}

TEST_CASE("property: b_d agrees with the classical d on smooth forms") {
  BChart chart({"u", "f", "v"}, 1);
  testing::ExprGenerator gen(chart.coords(), 99);
  for (int degree : {0, 1, 2}) {
    for (int s = 0; s < 40; ++s) {
      std::map<MultiIndex, Expr> beta;
      BForm random = random_form(chart, degree, gen, 3);
      for (const auto& [idx, w] : random.components()) beta[idx] = w;
      BForm lhs = b_d(BForm::from_coordinate_components(chart, degree, beta));
      BForm rhs = BForm::from_coordinate_components(chart, degree + 1, classical_d(beta, chart.coords()));
      BForm diff_form = lhs - rhs;
      for (const auto& [idx, c] : diff_form.components()) CHECK(polynomially_zero(c, chart.coords()));
    }
  }
}

TEST_CASE("property: pairing is alternating") {
  BChart chart({"u", "f", "v", "w"}, 1);
  testing::ExprGenerator gen(chart.coords(), 5);
  std::mt19937_64 rng(5);
  for (int s = 0; s < 50; ++s) {
    BForm w = random_form(chart, 3, gen, 2);
    Environment env = chart.environment(uniform_point(chart.box(), rng));
    if (s % 5 == 0) env["f"] = 0.0;
    std::vector<Eigen::VectorXd> v;
    for (int k = 0; k < 3; ++k) v.push_back(uniform_point(chart.box(), rng));
    double a = pair(w, std::span<const Eigen::VectorXd>(v), env);
    std::swap(v[0], v[2]);
    double b = pair(w, std::span<const Eigen::VectorXd>(v), env);
    CHECK(std::abs(a + b) <= 1e-12 * (1.0 + std::abs(a)));
    v[1] = v[0];
    CHECK(std::abs(pair(w, std::span<const Eigen::VectorXd>(v), env)) <= 1e-12 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("pfaffian matches the expansion") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int n = 2; n <= 8; n += 2)
    for (int s = 0; s < 20; ++s) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          a(i, j) = g(rng);
          a(j, i) = -a(i, j);
        }
      double ref = pfaffian_bruteforce(a);
      CHECK(pfaffian(a) == doctest::Approx(ref).epsilon(1e-10));
      CHECK(pfaffian(a) * pfaffian(a) == doctest::Approx(a.determinant()).epsilon(1e-9));
    }
}

TEST_CASE("b-symplectic verdicts") {
  for (int n = 1; n <= 3; ++n) {
    BSymplecticReport r = is_b_symplectic(bdarboux_model(n));
    CHECK(r.verdict);
    CHECK(r.min_abs_pfaffian == 1.0);
    CHECK(r.max_abs_pfaffian == 1.0);
    CHECK(r.closedness_residual == 0.0);
    CHECK(r.samples == 256);
  }

  // dx ^ dy as a b-form: the dy slot carries y1, so the Pfaffian is y1
  BChart chart = bdarboux_chart(1);
  BForm smooth = BForm::from_coordinate_components(chart, 2, {{{0, 1}, Expr(1)}});
  Environment env{{"x1", 0.3}, {"y1", 0.7}};
  CHECK(pfaffian(frame_matrix(smooth, env)) == doctest::Approx(0.7));
  BSymplecticReport r = is_b_symplectic(smooth);
  CHECK_FALSE(r.verdict);
  CHECK(r.closed);
  CHECK(r.min_abs_pfaffian == 0.0);

  // x2 dx1 ^ dy1/y1 + dx2 ^ dy2 is not closed
  BForm open = bdarboux_model(2);
  open.set({0, 1}, parse("x2"));
  BSymplecticReport r2 = is_b_symplectic(open);
  CHECK_FALSE(r2.verdict);
  CHECK_FALSE(r2.closed);
  CHECK(r2.closedness_residual > 0.1);
  CHECK(r2.to_text().find("verdict: false") != std::string::npos);

  CHECK_THROWS_AS(is_b_symplectic(BForm(BChart({"a", "b", "c"}, 0), 2)), BCalcError);

  // same seed, same report
  CHECK(is_b_symplectic(open, {64, 7}).to_text() == is_b_symplectic(open, {64, 7}).to_text());
}

TEST_CASE("b-Darboux models") {
  BForm w1 = bdarboux_model(1);
  CHECK(w1.chart().coords() == std::vector<std::string>{"x1", "y1"});
  CHECK(w1.chart().f() == "y1");
  CHECK(w1.components().size() == 1);
  CHECK(to_string(w1.component({0, 1})) == "1");
  BForm w2 = bdarboux_model(2);
  CHECK(w2.components().size() == 2);
  CHECK(to_string(w2.component({2, 3})) == "1");
  // alpha/beta decomposition: dx1 ^ dy1/y1 has alpha = dx1, beta = dx2 ^ dy2
  CHECK(to_string(w2.alpha().component({0})) == "1");
  CHECK(w2.beta().components().size() == 1);
  CHECK(to_string(w2.beta().component({2, 3})) == "1");
  BForm rebuilt = BForm::from_alpha_beta(w2.alpha(), w2.beta());
  CHECK((rebuilt - w2).is_zero());
}

TEST_CASE("inversion to Poisson bivectors") {
  PoissonBivector p1 = invert_to_poisson(bdarboux_model(1));
  CHECK(to_string(p1.coefficient("x1", "y1")) == "y1");
  Environment env{{"x1", 0.4}, {"y1", -0.3}};
  CHECK(p1.bracket(parse("x1"), parse("y1"), env) == doctest::Approx(-0.3));

  PoissonBivector p2 = invert_to_poisson(bdarboux_model(2));
  CHECK(to_string(p2.coefficient("x2", "y2")) == "1");
  CHECK(to_string(p2.coefficient("x1", "y1")) == "y1");
  CHECK(p2.coefficient("x1", "x2").is_zero());
  CHECK(p2.coefficient("y1", "y2").is_zero());

  BChart red({"phi", "p"}, 0);
  BForm w(red, 2);
  w.set({0, 1}, Expr(1));  // dphi/phi ^ dp
  PoissonBivector pr = invert_to_poisson(w);
  CHECK(to_string(pr.coefficient("phi", "p")) == "phi");
  CHECK(pr.to_csv() == "i,j,bracket\nphi,p,phi\n");

  // X_H = {., H} satisfies i_{X_H} omega = dH
  std::vector<Expr> xh = pr.hamiltonian_field(parse("p^2/2"));
  Environment at{{"phi", 0.7}, {"p", -1.3}};
  CHECK(eval(xh[0], at) == doctest::Approx(0.7 * -1.3));
  CHECK(xh[1].is_zero());
}

TEST_CASE("property: Jacobi identity of inverted b-Darboux models") {
  for (int n = 1; n <= 3; ++n) {
    BForm w = bdarboux_model(n);
    PoissonBivector pi = invert_to_poisson(w);
    testing::ExprGenerator gen(w.chart().coords(), 300 + n);
    std::mt19937_64 rng(n);
    for (int s = 0; s < 50; ++s) {
      Expr F = gen.polynomial(3), G = gen.polynomial(3), K = gen.polynomial(3);
      Eigen::VectorXd x = uniform_point(w.chart().box(), rng);
      double y = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
      x(1) = (s % 2 == 0) ? y : -y;
      Environment env = w.chart().environment(x);
      double scale = 1.0 + std::abs(pi.bracket(F, G, env)) + std::abs(pi.bracket(G, K, env)) +
                     std::abs(pi.bracket(K, F, env));
      CHECK(std::abs(pi.jacobiator(F, G, K, env)) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("property: b-frame bracket equals the classical bracket off Z") {
  BForm base = bdarboux_model(2);
  const BChart& chart = base.chart();
  testing::ExprGenerator gen(chart.coords(), 4242);
  std::mt19937_64 rng(2);
  int checked = 0;
  for (int s = 0; s < 10; ++s) {
    // closed perturbation of the model
    BForm eta(chart, 1);
    for (int i = 0; i < chart.dim(); ++i) eta.set({i}, Rational(1, 10) * gen.polynomial(2));
    BForm w = base + b_d(eta);
    PoissonBivector pi = invert_to_poisson(w);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd x = uniform_point(chart.box(), rng);
      if (std::abs(x(1)) < 0.05) continue;
      Environment env = chart.environment(x);
      if (std::abs(pfaffian(frame_matrix(w, env))) < 0.2) continue;
      Expr F = gen.polynomial(2), G = gen.polynomial(2);
      double a = pi.bracket(F, G, env);
      double b = classical_bracket(w, F, G, env, 0.05);
      CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
      ++checked;
    }
  }
  CHECK(checked > 50);
  CHECK_THROWS_AS(classical_bracket(base, parse("x1"), parse("y1"), {{"x1", 0}, {"y1", 1e-4}, {"x2", 0}, {"y2", 0}}),
                  BCalcError);
}

TEST_CASE("signed relabelling pulls back forms") {
  // target (x1, y1), source (y, p); x1 = -p, y1 = y
  BChart source({"y", "p"}, 0);
  std::vector<int> perm{1, 0}, signs{-1, 1};
  BForm pulled = pullback_signed(bdarboux_model(1), source, perm, signs);
  // -dp ^ dy/y = dy/y ^ dp
  CHECK(to_string(pulled.component({0, 1})) == "1");
  std::vector<int> bad_perm{0, 1};
  CHECK_THROWS_AS(pullback_signed(bdarboux_model(1), source, bad_perm, signs), BCalcError);
}
