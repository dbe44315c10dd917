#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "blie/reduction.hpp"
#include "support/random_expr.hpp"

using namespace blie;

namespace {

const std::vector<std::string> kGroups{"se2", "galilean", "heisenberg_q"};

Eigen::VectorXd normal_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::vector<Connection> connections(const TrivializedBundle& b) {
  const int m = b.h_dim();
  Eigen::VectorXd xi = Eigen::VectorXd::LinSpaced(m, 0.3, -0.4);
  std::vector<Connection> out;
  out.push_back(make_connection(b));
  out.push_back(make_connection(b, Deformation{xi, parse("1 + phi^2/2"), false}));
  if (b.mode() == FrameMode::b) out.push_back(make_connection(b, Deformation{xi, parse("cos(phi)"), true}));
  return out;
}

TrivializedBundle bundle_for(const std::string& name, FrameMode mode = FrameMode::b) {
  BLieGroupPair pair = builtin(name);
  pair.phi = "phi";  // one name for the deformation coefficient
  return TrivializedBundle(pair, mode);
}

}  // namespace

TEST_CASE("zeta") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b = bundle_for(name);
    const int n = b.base_dim();
    const int m = b.h_dim();
    std::mt19937_64 rng(1);
    Eigen::VectorXd q = b.sample_base(rng);
    CHECK(max_abs(b.zeta(q, Eigen::VectorXd::Zero(m))) == 0.0);
    Eigen::VectorXd xi = normal_vector(m, rng);
    Eigen::VectorXd at_e = b.zeta(Eigen::VectorXd::Zero(n), xi);
    CHECK(max_abs(at_e.head(m) - xi) <= 1e-12);
    CHECK(at_e(m) == 0.0);
  }
}

TEST_CASE("connection axioms") {
  for (FrameMode mode : {FrameMode::b, FrameMode::classical})
    for (const auto& name : kGroups) {
      CAPTURE(name);
      TrivializedBundle b = bundle_for(name, mode);
      for (const auto& theta : connections(b)) {
        CAPTURE(theta.tag());
        AxiomResiduals r = connection_axioms(theta, 100, 42);
        CHECK(r.reproducing <= 1e-10);
        CHECK(r.equivariance <= 1e-10);
      }
    }
}

TEST_CASE("malformed deformations are rejected") {
  TrivializedBundle b = bundle_for("se2");
  TrivializedBundle c = bundle_for("se2", FrameMode::classical);
  Eigen::VectorXd xi = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(make_connection(b, Deformation{xi, parse("x*phi"), false}), ReductionError);
  CHECK_THROWS_AS(make_connection(b, Deformation{Eigen::VectorXd::Ones(3), parse("1"), false}), ReductionError);
  CHECK_THROWS_AS(make_connection(c, Deformation{xi, parse("1"), true}), ReductionError);
}

TEST_CASE("horizontal projection") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b = bundle_for(name);
    const int n = b.base_dim();
    const int m = b.h_dim();
    for (const auto& theta : connections(b)) {
      CAPTURE(theta.tag());
      std::mt19937_64 rng(8);
      double vert = 0.0, idem = 0.0;
      for (int s = 0; s < 100; ++s) {
        Eigen::VectorXd q = b.sample_base(rng, s % 5 == 0);
        Eigen::VectorXd z = b.zeta(q, normal_vector(m, rng));
        vert = std::max(vert, max_abs(horizontal_projection(theta, q, z) - z));
        Eigen::VectorXd v = normal_vector(n, rng);
        Eigen::VectorXd once = horizontal_projection(theta, q, v);
        idem = std::max(idem, max_abs(horizontal_projection(theta, q, once) - once));
      }
      CHECK(vert <= 1e-10);
      CHECK(idem <= 1e-10);
    }
    std::mt19937_64 rng(9);
    Eigen::VectorXd q = b.sample_base(rng);
    Eigen::VectorXd e_phi = Eigen::VectorXd::Unit(n, m);
    CHECK(max_abs(horizontal_projection(make_connection(b), q, e_phi)) == 0.0);
  }
}

TEST_CASE("phi_theta splits tangent vectors equivariantly") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b = bundle_for(name);
    const int n = b.base_dim();
    const int m = b.h_dim();
    for (const auto& theta : connections(b)) {
      CAPTURE(theta.tag());
      std::mt19937_64 rng(10);
      double trip = 0.0, equi = 0.0, vert = 0.0, horiz = 0.0, annihilated = 0.0;
      for (int s = 0; s < 200; ++s) {
        Eigen::VectorXd q = b.sample_base(rng, s % 5 == 0);
        Eigen::VectorXd v = normal_vector(n, rng);
        auto [u, xi] = phi_theta(theta, q, v);
        annihilated = std::max(annihilated, max_abs(theta(q, u)));
        trip = std::max(trip, max_abs(phi_theta_inverse(theta, q, u, xi) - v));

        Eigen::VectorXd x = normal_vector(m, rng);
        auto [u0, x0] = phi_theta(theta, q, b.zeta(q, x));
        vert = std::max(vert, std::max(max_abs(u0), max_abs(x0 - x)));
        auto [u1, x1] = phi_theta(theta, q, u);
        horiz = std::max(horiz, std::max(max_abs(u1 - u), max_abs(x1)));

        if (s < 100) {
          Eigen::VectorXd h = b.sample_acting(rng, q);
          Eigen::MatrixXd hm = b.subgroup().matrix(h);
          Eigen::VectorXd qp = b.translate_base<double>(hm, q);
          Eigen::MatrixXd a = b.translation_jacobian<double>(hm, q);
          auto [u2, x2] = phi_theta(theta, qp, a * v);
          Eigen::VectorXd ad = adjoint_matrix<double>(b.subgroup(), h) * xi;
          equi = std::max(equi, std::max(max_abs(u2 - a * u), max_abs(x2 - ad)));
        }
      }
      CHECK(trip <= 1e-12);
      CHECK(annihilated <= 1e-12);
      CHECK(vert <= 1e-10);
      CHECK(horiz <= 1e-10);
      CHECK(equi <= 1e-9);
    }
  }
}

TEST_CASE("psi_theta splits covectors equivariantly") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b = bundle_for(name);
    const int n = b.base_dim();
    const int m = b.h_dim();
    for (const auto& theta : connections(b)) {
      CAPTURE(theta.tag());
      std::mt19937_64 rng(12);
      double trip = 0.0, equi = 0.0, annihilator = 0.0, pure = 0.0, proj = 0.0;
      for (int s = 0; s < 200; ++s) {
        Eigen::VectorXd x = b.sample_point(rng, s % 5 == 0);
        Eigen::VectorXd q = x.head(n);
        Eigen::VectorXd y = psi_theta<double>(theta, x);
        trip = std::max(trip, max_abs(psi_theta_inverse<double>(theta, y) - x));
        // the annihilator part p e^phi kills every fundamental field
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
        beta(m) = y(n);
        annihilator = std::max(annihilator, max_abs(b.zeta_matrix<double>(q).transpose() * beta));

        Eigen::VectorXd in_ann = x;
        in_ann.tail(n) = beta;
        Eigen::VectorXd ya = psi_theta<double>(theta, in_ann);
        pure = std::max(pure, std::max(max_abs(ya.tail(m)), std::abs(ya(n) - y(n))));
        Eigen::VectorXd mu = normal_vector(m, rng);
        Eigen::VectorXd from_mu = x;
        from_mu.tail(n) = theta.matrix<double>(q).transpose() * mu;
        Eigen::VectorXd ym = psi_theta<double>(theta, from_mu);
        pure = std::max(pure, std::max(std::abs(ym(n)), max_abs(ym.tail(m) - mu)));

        if (s < 100) {
          Eigen::VectorXd h = b.sample_acting(rng, q);
          Eigen::VectorXd yl = psi_theta<double>(theta, b.lift(h, x));
          Eigen::VectorXd expect_mu = coadjoint_star(b.subgroup(), h, y.tail(m));
          Eigen::MatrixXd hm = b.subgroup().matrix(h);
          Eigen::VectorXd qp = b.translate_base<double>(hm, q);
          equi = std::max(equi, max_abs(yl.tail(m) - expect_mu));
          equi = std::max(equi, max_abs(yl.head(n) - qp));
          equi = std::max(equi, std::abs(yl(n) - y(n)));
          Eigen::Vector2d a = project_annihilator(q, y(n));
          Eigen::Vector2d c = project_annihilator(qp, yl(n));
          proj = std::max(proj, (a - c).cwiseAbs().maxCoeff());
        }
      }
      CHECK(trip <= 1e-12);
      CHECK(annihilator <= 1e-12);
      CHECK(pure <= 1e-12);
      CHECK(equi <= 1e-9);
      CHECK(proj <= 1e-12);
    }
  }
}

TEST_CASE("project_annihilator") {
  Eigen::VectorXd q(3);
  q << 0.2, -0.1, 0.7;
  CHECK(project_annihilator(q, 0.0) == Eigen::Vector2d(0.7, 0.0));
  CHECK(project_annihilator(q, 1.5) == Eigen::Vector2d(0.7, 1.5));
}

TEST_CASE("lambda_theta") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b = bundle_for(name);
    const int n = b.base_dim();
    const int m = b.h_dim();
    for (const auto& theta : connections(b)) {
      std::mt19937_64 rng(13);
      for (int s = 0; s < 20; ++s) {
        Eigen::VectorXd y = psi_theta<double>(theta, b.sample_point(rng, s % 5 == 0));
        Eigen::VectorXd q = y.head(n);
        Eigen::VectorXd w = normal_vector(2 * n, rng);
        Eigen::VectorXd y0 = y;
        y0.tail(m).setZero();
        CHECK(lambda_theta(theta, y0, w) == 0.0);
        Eigen::VectorXd fiber = w;
        fiber.head(n).setZero();
        CHECK(lambda_theta(theta, y, fiber) == 0.0);
        Eigen::VectorXd xi = normal_vector(m, rng);
        Eigen::VectorXd vert = Eigen::VectorXd::Zero(2 * n);
        vert.head(n) = b.zeta(q, xi);
        vert(2 * n - 1) = 3.0;
        CHECK(lambda_theta(theta, y, vert) == doctest::Approx(y.tail(m).dot(xi)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("coupling identity") {
  for (FrameMode mode : {FrameMode::b, FrameMode::classical})
    for (const auto& name : kGroups) {
      CAPTURE(name);
      TrivializedBundle b = bundle_for(name, mode);
      const int n = b.base_dim();
      for (const auto& theta : connections(b)) {
        CAPTURE(theta.tag());
        std::mt19937_64 rng(14);
        double worst = 0.0, pairwise = 0.0;
        for (int s = 0; s < 200; ++s) {
          Eigen::VectorXd x = b.sample_point(rng, s % 4 == 0);
          worst = std::max(worst, coupling_identity_residual(theta, x));
          pairwise = std::max(pairwise, coupling_identity_residual(theta, x, normal_vector(2 * n, rng),
                                                                   normal_vector(2 * n, rng)));
        }
        CHECK(worst <= 1e-8);
        CHECK(pairwise <= 1e-8);
      }
    }
}

TEST_CASE("deformations change d lambda_theta") {
  TrivializedBundle b = bundle_for("se2");
  auto all = connections(b);
  std::mt19937_64 rng(15);
  Eigen::VectorXd x = b.sample_point(rng);
  Eigen::MatrixXd d0 = d_lambda_theta(all[0], psi_theta<double>(all[0], x));
  Eigen::MatrixXd d1 = d_lambda_theta(all[1], psi_theta<double>(all[1], x));
  CHECK((d0 - d1).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("reduced Poisson structures") {
  ReducedPoisson se2 = reduced_poisson(TrivializedBundle(builtin("se2")));
  CHECK(se2.coords == std::vector<std::string>{"mu_P1", "mu_P2", "phi", "p"});
  CHECK(se2.bivector.to_csv() == "i,j,bracket\nphi,p,phi\n");

  ReducedPoisson heis = reduced_poisson(TrivializedBundle(builtin("heisenberg_q")));
  CHECK(heis.bivector.to_csv() == "i,j,bracket\na,p,a\n");

  ReducedPoisson se2c = reduced_poisson(TrivializedBundle(builtin("se2"), FrameMode::classical));
  CHECK(se2c.bivector.to_csv() == "i,j,bracket\nphi,p,1\n");

  BLieGroupPair gal_pair = builtin("galilean");
  ReducedPoisson gal = reduced_poisson(TrivializedBundle(gal_pair));
  const LieAlgebra& h = gal_pair.subgroup.algebra();
  std::mt19937_64 rng(16);
  for (int s = 0; s < 20; ++s) {
    Environment env;
    Eigen::VectorXd mu = normal_vector(h.dim(), rng);
    for (int i = 0; i < h.dim(); ++i) env[gal.coords[static_cast<std::size_t>(i)]] = mu(i);
    env["s"] = 0.4;
    env["p"] = -0.2;
    for (int i = 0; i < h.dim(); ++i)
      for (int j = 0; j < h.dim(); ++j) {
        double expect = lie_poisson(h, Expr::variable(gal.coords[static_cast<std::size_t>(i)]),
                                    Expr::variable(gal.coords[static_cast<std::size_t>(j)]), mu);
        CHECK(eval(gal.bivector.coefficient(i, j), env) == doctest::Approx(expect));
      }
  }
  // {mu_K1, mu_E} = -mu_P1 lives on the full dual algebra
  const LieAlgebra& g = gal_pair.group.algebra();
  auto names = g.dual_coordinate_names();
  Expr k1e = lie_poisson_expr(g, Expr::variable("mu_K1"), Expr::variable("mu_E"), names);
  CHECK(to_string(k1e) == "-mu_P1");

  for (const ReducedPoisson* r : {&se2, &heis, &gal}) {
    const int m = r->h_dim;
    for (int i = 0; i < m; ++i) {
      CHECK(r->bivector.coefficient(i, m).is_zero());
      CHECK(r->bivector.coefficient(i, m + 1).is_zero());
    }
    Expr phi_p = r->bivector.coefficient(m, m + 1);
    CHECK(substitute(phi_p, {{r->coords[static_cast<std::size_t>(m)], Expr()}}).is_zero());
  }
}

TEST_CASE("reduced Poisson Jacobiator") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    ReducedPoisson r = reduced_poisson(TrivializedBundle(builtin(name)));
    testing::ExprGenerator gen(r.coords, 21);
    std::mt19937_64 rng(21);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      Environment env;
      for (const auto& c : r.coords) env[c] = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      Expr f = gen.polynomial(2), g = gen.polynomial(2), k = gen.polynomial(2);
      worst = std::max(worst, std::abs(r.bivector.jacobiator(f, g, k, env)));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("reduced bracket from invariant functions") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b(builtin(name));
    const LieAlgebra& h = b.subgroup().algebra();
    auto coords = reduced_coordinates(b);
    const int m = b.h_dim();
    auto phi = invariant_field(b, Expr::variable(coords[static_cast<std::size_t>(m)]));
    auto p = invariant_field(b, Expr::variable("p"));
    std::mt19937_64 rng(22);
    for (int s = 0; s < 10; ++s) {
      Eigen::VectorXd x = b.sample_point(rng, s % 5 == 0);
      CHECK(reduced_bracket_via_invariants(b, phi, p, x) == doctest::Approx(x(m)));
      CHECK(reduced_bracket_via_invariants(b, p, p, x) == 0.0);
      Eigen::VectorXd nu = reduced_point<double>(b, x).head(m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          auto fi = invariant_field(b, Expr::variable(coords[static_cast<std::size_t>(i)]));
          auto fj = invariant_field(b, Expr::variable(coords[static_cast<std::size_t>(j)]));
          double expect = 0.0;
          for (int k = 0; k < m; ++k) expect -= h.c(i, j, k).to_double() * nu(k);
          CHECK(reduced_bracket_via_invariants(b, fi, fj, x) == doctest::Approx(expect).epsilon(1e-10));
        }
      Eigen::VectorXd hh = b.sample_acting(rng, x);
      CHECK(reduced_bracket_via_invariants(b, phi, p, b.lift(hh, x)) ==
            doctest::Approx(reduced_bracket_via_invariants(b, phi, p, x)));
    }
    auto raw = ScalarField::from_expr(Expr::variable(b.chart().coords()[0]), b.chart().coords());
    std::mt19937_64 r2(23);
    CHECK_THROWS_AS(reduced_bracket_via_invariants(b, raw, p, b.sample_point(r2)), ReductionError);
  }
}

TEST_CASE("reduced brackets do not depend on the connection") {
  for (const auto& name : kGroups) {
    CAPTURE(name);
    TrivializedBundle b = bundle_for(name);
    ReducedPoisson red = reduced_poisson(b);
    auto conns = connections(b);
    testing::ExprGenerator gen(red.coords, 31);
    std::mt19937_64 rng(31);
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
      Expr f = gen.polynomial(2), g = gen.polynomial(2);
      Eigen::VectorXd x = b.sample_point(rng, s % 5 == 0);
      double oracle = reduced_bracket_via_invariants(b, invariant_field(b, f), invariant_field(b, g), x);
      Eigen::VectorXd r = reduced_point<double>(b, x);
      double local = red.bivector.bracket(f, g, BChart(red.coords, 0).environment(r));
      worst = std::max(worst, std::abs(local - oracle));
      for (const auto& theta : conns) {
        Eigen::VectorXd y = psi_theta<double>(theta, x);
        worst = std::max(worst, std::abs(reduced_bracket_theta(theta, f, g, y) - oracle));
      }
    }
    CHECK(worst <= 1e-8);
  }
}
