#include "blie/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace blie {

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd normal_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// Polynomial of total degree <= degree with integer coefficients in [-3, 3].
Expr random_polynomial(const std::vector<std::string>& vars, int degree, std::mt19937_64& rng) {
  Expr out;
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::bernoulli_distribution keep(0.35);
  std::vector<int> exps(vars.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i == vars.size()) {
      if (!keep(rng)) return;
      int c = coeff(rng);
      if (c == 0) return;
      Expr term(c);
      for (std::size_t k = 0; k < vars.size(); ++k) term = term * pow(Expr::variable(vars[k]), exps[k]);
      out = out + term;
      return;
    }
    for (int e = 0; e <= left; ++e) {
      exps[i] = e;
      self(self, i + 1, left - e);
    }
    exps[i] = 0;
  };
  rec(rec, 0, degree);
  return out;
}

BForm random_form(const BChart& chart, int degree, std::mt19937_64& rng) {
  BForm out(chart, degree);
  MultiIndex cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == degree) {
      out.set(cur, random_polynomial(chart.coords(), 3, rng));
      return;
    }
    for (int i = start; i < chart.dim(); ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

int nonzero_components(const BForm& w) {
  int bad = 0;
  for (const auto& [idx, c] : w.components())
    if (!to_polynomial(c, w.chart().coords()).is_zero()) ++bad;
  return bad;
}

ScalarField moment_component(const TrivializedBundle& b, Eigen::VectorXd xi) {
  return ScalarField::from([&b, xi](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return S(b.moment<S>(x).dot(xi.cast<S>()));
  });
}

class Suite {
 public:
  Suite(const RunConfig& config, VerifyReport& report)
      : config_(config), report_(report), pair_(build_pair(config)), bundle_(pair_, config.mode) {
    tol_ = config.verify.tolerance;
  }

  void run() {
    lie();
    bcalc();
    blift();
    auto conns = suite_connections(config_, bundle_);
    tangent_split(conns);
    cotangent_split(conns);
    annihilator(conns);
    coupling(conns);
    reduction(conns);
    dynamics();
  }

 private:
  void add(const std::string& section, const std::string& name, double value, double tol) {
    report_.checks.push_back({section, name, std::isnan(value) ? INFINITY : value, tol});
  }

  // One stream per check.
  std::mt19937_64 rng(std::uint64_t stream) const { return std::mt19937_64(config_.verify.seed * 1000003ULL + stream); }

  int samples() const { return config_.verify.samples; }

  void lie() {
    LieAlgebra declared = declared_algebra(config_, pair_);
    const auto& basis = pair_.group.basis();
    LieAlgebra oracle = structure_constants_from_matrices(basis, pair_.group.labels());
    int mismatch = 0;
    const int d = oracle.dim();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          if (declared.c(i, j, k) != oracle.c(i, j, k)) ++mismatch;
    add("lie", "structure constants", mismatch, 0);
    add("lie", "antisymmetry", static_cast<double>(declared.antisymmetry_violations().size()), 0);
    add("lie", "Jacobi", static_cast<double>(declared.jacobi_violations().size()), 0);

    std::vector<RationalMatrix> hbasis;
    for (int i : pair_.subgroup_basis) hbasis.push_back(basis[static_cast<std::size_t>(i)]);
    int open = 0;
    for (const auto& a : hbasis)
      for (const auto& b : hbasis)
        if (!coordinates_in_span(hbasis, commutator(a, b))) ++open;
    add("lie", "subalgebra closed", open, 0);

    auto names = declared.dual_coordinate_names();
    PoissonBivector lp(names);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        lp.set(i, j,
               lie_poisson_expr(declared, Expr::variable(names[static_cast<std::size_t>(i)]),
                                Expr::variable(names[static_cast<std::size_t>(j)]), names));
    auto r = rng(1);
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
      Environment env;
      for (const auto& c : names) env[c] = std::uniform_real_distribution<double>(-1.0, 1.0)(r);
      Expr f = random_polynomial(names, 2, r), g = random_polynomial(names, 2, r), k = random_polynomial(names, 2, r);
      worst = std::max(worst, std::abs(lp.jacobiator(f, g, k, env)));
    }
    add("lie", "Lie-Poisson Jacobiator", worst, tol_ / 10);
  }

  void bcalc() {
    BChart chart({"u", "f", "v", "w"}, 1);
    auto r = rng(2);
    int bad = 0;
    for (int s = 0; s < config_.verify.random_forms; ++s) bad += nonzero_components(b_d(b_d(random_form(chart, s % 3, r))));
    add("bcalc", "d of d", bad, 0);

    int dlog_bad = 0;
    for (int s = 0; s < 20; ++s) {
      Rational c(std::uniform_int_distribution<int>(-4, 4)(r), std::uniform_int_distribution<int>(1, 3)(r));
      Expr g = random_polynomial(chart.coords(), 3, r);
      BForm expect = Expr(c) * BForm::coframe(chart, chart.defining()) + b_d(BForm::function(chart, g));
      dlog_bad += nonzero_components(d_bfunction(BFunction{chart, c, g}) - expect);
    }
    add("bcalc", "d log|f|", dlog_bad, 0);

    double darboux = 0.0;
    for (int n = 1; n <= 3; ++n) {
      SampleOptions o;
      o.seed = config_.verify.seed;
      BSymplecticReport rep = is_b_symplectic(bdarboux_model(n), o);
      darboux = std::max({darboux, std::abs(rep.min_abs_pfaffian - 1.0), std::abs(rep.max_abs_pfaffian - 1.0),
                          rep.verdict ? 0.0 : INFINITY});
    }
    add("bcalc", "b-Darboux Pfaffian", darboux, tol_ / 1e4);

    const BCotangentChart& cot = bundle_.cotangent();
    const int n = cot.base_dim();
    const int def = cot.base().defining();
    std::vector<int> order{def};
    for (int i = 0; i < n; ++i)
      if (i != def) order.push_back(i);
    std::vector<int> perm, signs;
    for (int i : order) {
      perm.push_back(n + i);
      signs.push_back(-1);
      perm.push_back(i);
      signs.push_back(1);
    }
    BForm omega = canonical_bsymplectic(cot);
    BForm normal = pullback_signed(bdarboux_model(n), cot.total(), perm, signs);
    add("bcalc", "canonical form is b-Darboux", nonzero_components(omega - normal), 0);
  }

  void blift() {
    const int n = bundle_.base_dim();
    const int m = bundle_.h_dim();
    const int phi = bundle_.phi_index();
    Eigen::MatrixXd omega = bundle_.canonical_matrix();
    auto r = rng(3);
    double law = 0.0, lam = 0.0, om = 0.0, ham = 0.0, equi = 0.0;
    int z_moved = 0;
    for (int s = 0; s < samples(); ++s) {
      Eigen::VectorXd x = bundle_.sample_point(r, s % 5 == 0);
      Eigen::VectorXd h1 = bundle_.sample_acting(r, x);
      Eigen::VectorXd y = bundle_.lift(h1, x);
      if (y(phi) != x(phi)) ++z_moved;
      Eigen::VectorXd h2 = bundle_.sample_acting(r, y);
      Eigen::MatrixXd prod = bundle_.subgroup().matrix(h2) * bundle_.subgroup().matrix(h1);
      law = std::max(law, max_abs(bundle_.lift(h2, y) - bundle_.lift<double>(prod, x)));

      Eigen::MatrixXd j = bundle_.lift_jacobian(h1, x);
      Eigen::VectorXd pulled = j.topRows(n).transpose() * y.tail(n);
      Eigen::VectorXd lambda = Eigen::VectorXd::Zero(2 * n);
      lambda.head(n) = x.tail(n);
      lam = std::max(lam, max_abs(pulled - lambda));
      om = std::max(om, max_abs(j.transpose() * omega * j - omega));

      Eigen::VectorXd xi = normal_vector(m, r);
      Eigen::VectorXd lhs = omega.transpose() * bundle_.fundamental_field(xi, x);
      ham = std::max(ham, max_abs(lhs - bundle_.frame_gradient(moment_component(bundle_, xi), x)));
      Eigen::VectorXd mu = bundle_.moment<double>(x);
      equi = std::max(equi, max_abs(bundle_.moment<double>(y) - coadjoint_star(bundle_.subgroup(), h1, mu)));
    }
    add("blift", "lift is a left action", law, tol_ / 10);
    add("blift", "lift preserves lambda", lam, tol_ / 10);
    add("blift", "lift preserves omega", om, tol_ / 10);
    add("blift", "lift preserves Z", z_moved, 0);
    add("blift", "moment map is Hamiltonian", ham, tol_);
    add("blift", "moment equivariance", equi, tol_ / 10);
  }

  using Conns = std::vector<std::pair<std::string, Connection>>;

  void tangent_split(const Conns& conns) {
    const int n = bundle_.base_dim();
    const int m = bundle_.h_dim();
    std::uint64_t stream = 10;
    for (const auto& [tag, theta] : conns) {
      AxiomResiduals ax = connection_axioms(theta, samples(), config_.verify.seed + stream);
      add("tangent-split", "axiom reproducing [" + tag + "]", ax.reproducing, tol_ / 100);
      add("tangent-split", "axiom equivariance [" + tag + "]", ax.equivariance, tol_ / 100);
      auto r = rng(stream++);
      double trip = 0.0, equi = 0.0, vert = 0.0, idem = 0.0;
      for (int s = 0; s < samples(); ++s) {
        Eigen::VectorXd q = bundle_.sample_base(r, s % 5 == 0);
        Eigen::VectorXd v = normal_vector(n, r);
        auto [u, xi] = phi_theta(theta, q, v);
        trip = std::max(trip, max_abs(phi_theta_inverse(theta, q, u, xi) - v));
        Eigen::VectorXd z = bundle_.zeta(q, normal_vector(m, r));
        vert = std::max(vert, max_abs(horizontal_projection(theta, q, z) - z));
        Eigen::VectorXd once = horizontal_projection(theta, q, v);
        idem = std::max(idem, max_abs(horizontal_projection(theta, q, once) - once));

        Eigen::VectorXd h = bundle_.sample_acting(r, q);
        Eigen::MatrixXd hm = bundle_.subgroup().matrix(h);
        Eigen::VectorXd qp = bundle_.translate_base<double>(hm, q);
        Eigen::MatrixXd a = bundle_.translation_jacobian<double>(hm, q);
        auto [u2, x2] = phi_theta(theta, qp, a * v);
        Eigen::VectorXd ad = adjoint_matrix<double>(bundle_.subgroup(), h) * xi;
        equi = std::max({equi, max_abs(u2 - a * u), max_abs(x2 - ad)});
      }
      add("tangent-split", "projection fixes vertical vectors [" + tag + "]", vert, tol_ / 100);
      add("tangent-split", "projection is idempotent [" + tag + "]", idem, tol_ / 100);
      add("tangent-split", "phi_theta round trip [" + tag + "]", trip, tol_ / 1e4);
      add("tangent-split", "phi_theta equivariance [" + tag + "]", equi, tol_ / 10);
    }
  }

  void cotangent_split(const Conns& conns) {
    const int n = bundle_.base_dim();
    const int m = bundle_.h_dim();
    std::uint64_t stream = 20;
    for (const auto& [tag, theta] : conns) {
      auto r = rng(stream++);
      double trip = 0.0, equi = 0.0, ann = 0.0;
      for (int s = 0; s < samples(); ++s) {
        Eigen::VectorXd x = bundle_.sample_point(r, s % 5 == 0);
        Eigen::VectorXd q = x.head(n);
        Eigen::VectorXd y = psi_theta<double>(theta, x);
        trip = std::max(trip, max_abs(psi_theta_inverse<double>(theta, y) - x));
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
        beta(m) = y(n);
        ann = std::max(ann, max_abs(bundle_.zeta_matrix<double>(q).transpose() * beta));

        Eigen::VectorXd h = bundle_.sample_acting(r, q);
        Eigen::VectorXd yl = psi_theta<double>(theta, bundle_.lift(h, x));
        Eigen::VectorXd qp = bundle_.translate_base<double>(bundle_.subgroup().matrix(h), q);
        equi = std::max({equi, max_abs(yl.tail(m) - coadjoint_star(bundle_.subgroup(), h, y.tail(m))),
                         max_abs(yl.head(n) - qp), std::abs(yl(n) - y(n))});
      }
      add("cotangent-split", "psi_theta round trip [" + tag + "]", trip, tol_ / 1e4);
      add("cotangent-split", "psi_theta equivariance [" + tag + "]", equi, tol_ / 10);
      add("cotangent-split", "annihilator kills vertical vectors [" + tag + "]", ann, tol_ / 1e4);
    }
  }

  void annihilator(const Conns& conns) {
    const int n = bundle_.base_dim();
    std::uint64_t stream = 30;
    for (const auto& [tag, theta] : conns) {
      auto r = rng(stream++);
      double worst = 0.0;
      for (int s = 0; s < samples(); ++s) {
        Eigen::VectorXd x = bundle_.sample_point(r, s % 5 == 0);
        Eigen::VectorXd y = psi_theta<double>(theta, x);
        Eigen::VectorXd h = bundle_.sample_acting(r, x);
        Eigen::VectorXd yl = psi_theta<double>(theta, bundle_.lift(h, x));
        Eigen::Vector2d a = project_annihilator(y.head(n), y(n));
        Eigen::Vector2d b = project_annihilator(yl.head(n), yl(n));
        worst = std::max(worst, max_abs(a - b));
      }
      add("annihilator", "annihilator projection is invariant [" + tag + "]", worst, tol_ / 1e4);
    }
  }

  void coupling(const Conns& conns) {
    std::uint64_t stream = 40;
    for (const auto& [tag, theta] : conns) {
      auto r = rng(stream++);
      double off = 0.0, on = 0.0;
      for (int s = 0; s < config_.verify.coupling_samples; ++s) {
        bool on_z = s % 4 == 0;
        double res = coupling_identity_residual(theta, bundle_.sample_point(r, on_z));
        (on_z ? on : off) = std::max(on_z ? on : off, res);
      }
      add("coupling", "coupling identity [" + tag + "]", off, tol_);
      add("coupling", "coupling identity on Z [" + tag + "]", on, tol_);
    }
  }

  void reduction(const Conns& conns) {
    ReducedPoisson red = reduced_poisson(bundle_);
    const int m = red.h_dim;
    const LieAlgebra& h = bundle_.subgroup().algebra();
    std::vector<std::string> hn(red.coords.begin(), red.coords.begin() + m);

    int block = 0;
    for (int i = 0; i < m; ++i) {
      if (!red.bivector.coefficient(i, m).is_zero()) ++block;
      if (!red.bivector.coefficient(i, m + 1).is_zero()) ++block;
      for (int j = i + 1; j < m; ++j) {
        Expr expect = lie_poisson_expr(h, Expr::variable(hn[static_cast<std::size_t>(i)]),
                                       Expr::variable(hn[static_cast<std::size_t>(j)]), hn);
        if (!to_polynomial(red.bivector.coefficient(i, j) - expect, red.coords).is_zero()) ++block;
      }
    }
    add("reduction", "block structure", block, 0);
    Expr phi_p = substitute(red.bivector.coefficient(m, m + 1), {{red.coords[static_cast<std::size_t>(m)], Expr()}});
    const bool b_mode = bundle_.mode() == FrameMode::b;
    add("reduction", "Z is a Poisson submanifold", b_mode && !to_polynomial(phi_p, red.coords).is_zero() ? 1 : 0, 0);

    auto r = rng(50);
    double jac = 0.0;
    for (int s = 0; s < 20; ++s) {
      Environment env;
      for (const auto& c : red.coords) env[c] = std::uniform_real_distribution<double>(-1.0, 1.0)(r);
      Expr f = random_polynomial(red.coords, 2, r), g = random_polynomial(red.coords, 2, r),
           k = random_polynomial(red.coords, 2, r);
      jac = std::max(jac, std::abs(red.bivector.jacobiator(f, g, k, env)));
    }
    add("reduction", "reduced Jacobiator", jac, tol_);

    auto ri = rng(51);
    double local = 0.0, across = 0.0;
    BChart red_chart(red.coords, m);
    for (int s = 0; s < config_.verify.invariant_pairs; ++s) {
      Expr f = random_polynomial(red.coords, 2, ri), g = random_polynomial(red.coords, 2, ri);
      Eigen::VectorXd x = bundle_.sample_point(ri, s % 5 == 0);
      double oracle = reduced_bracket_via_invariants(bundle_, invariant_field(bundle_, f), invariant_field(bundle_, g), x);
      Eigen::VectorXd rp = reduced_point<double>(bundle_, x);
      local = std::max(local, std::abs(red.bivector.bracket(f, g, red_chart.environment(rp)) - oracle));
      for (const auto& [tag, theta] : conns)
        across = std::max(across, std::abs(reduced_bracket_theta(theta, f, g, psi_theta<double>(theta, x)) - oracle));
    }
    add("reduction", "local expression matches invariant functions", local, tol_);
    add("reduction", "connection independence", across, tol_);
  }

  void dynamics() {
    FlowSetup f = make_flow(config_, bundle_);
    const int phi = f.options.phi_index;
    Trajectory tr = integrate(f.field, f.x0, f.options);
    LeafReport rep = leaf_report(f.reduced, tr);
    add("dynamics", "energy drift", tr.energy_drift / (1.0 + std::abs(tr.energy.front())), tol_ * 100);
    add("dynamics", "sign of phi constant", rep.sign_constant ? 0 : 1, 0);
    add("dynamics", "left the box", tr.exited ? 1 : 0, 0);
    Eigen::VectorXd on_z = f.x0;
    on_z(phi) = 0.0;
    Trajectory tz = integrate(f.field, on_z, f.options);
    add("dynamics", "Z is invariant", leaf_report(f.reduced, tz).stays_on_z ? 0 : 1, 0);
  }

  const RunConfig& config_;
  VerifyReport& report_;
  BLieGroupPair pair_;
  TrivializedBundle bundle_;
  double tol_ = 1e-8;
};

}  // namespace

std::vector<std::pair<std::string, Connection>> suite_connections(const RunConfig& config,
                                                                  const TrivializedBundle& bundle) {
  const int m = bundle.h_dim();
  const std::string& phi = bundle.pair().phi;
  Eigen::VectorXd xi = Eigen::VectorXd::LinSpaced(m, 0.3, -0.4);
  std::vector<std::pair<std::string, Connection>> out;
  out.emplace_back("default", make_connection(bundle));
  out.emplace_back("smooth-deformed", make_connection(bundle, Deformation{xi, parse("1 + " + phi + "^2/2"), false}));
  if (bundle.mode() == FrameMode::b)
    out.emplace_back("b-deformed", make_connection(bundle, Deformation{xi, parse("cos(" + phi + ")"), true}));
  if (config.connection.deformed) {
    const auto& wanted = config.connection;
    Eigen::VectorXd cxi = Eigen::Map<const Eigen::VectorXd>(wanted.xi.data(), static_cast<Eigen::Index>(wanted.xi.size()));
    try {
      out.emplace_back("configured", make_connection(bundle, Deformation{cxi, parse(wanted.c), wanted.b_form}));
    } catch (const ReductionError& e) {
      throw ConfigError(std::string("connection: ") + e.what());
    }
  }
  return out;
}

FlowSetup make_flow(const RunConfig& config, const TrivializedBundle& bundle) {
  FlowSetup f;
  f.reduced = reduced_poisson(bundle);
  const auto& coords = f.reduced.coords;
  const int phi = f.reduced.h_dim;
  f.x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coords.size()));
  f.x0(phi) = 1.0;
  for (const auto& [name, value] : config.flow.x0) {
    auto it = std::find(coords.begin(), coords.end(), name);
    if (it == coords.end()) throw ConfigError("flow.x0: '" + name + "' is not a reduced coordinate");
    f.x0(it - coords.begin()) = value;
  }
  std::set<std::string, std::less<>> allowed(coords.begin(), coords.end());
  try {
    f.options.hamiltonian = parse(config.flow.hamiltonian, allowed);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("flow.hamiltonian: ") + e.what());
  }
  f.field = hamiltonian_vf(f.reduced.bivector, f.options.hamiltonian);
  f.options.dt = config.flow.dt;
  f.options.T = config.flow.T;
  f.options.method = parse_method(config.flow.method);
  f.options.phi_index = phi;
  f.options.log_phi = config.flow.log_phi;
  f.options.box.assign(coords.size(), {-1e3, 1e3});
  f.options.casimirs = reduced_casimirs(bundle);
  return f;
}

VerifyReport run_verify(const RunConfig& config) {
  VerifyReport report;
  report.seed = config.verify.seed;
  report.group = config.custom ? config.custom->name : config.builtin;
  Suite(config, report).run();
  return report;
}

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok(); });
}

std::vector<std::string> VerifyReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.ok()) out.push_back(c.section + ": " + c.name);
  return out;
}

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  os << "group: " << group << "\n";
  os << "seed: " << seed << "\n";
  for (const auto& c : checks)
    os << c.section << ": " << c.name << " = " << format_double(c.value) << " (<= " << format_double(c.tolerance)
       << ") " << (c.ok() ? "ok" : "FAIL") << "\n";
  os << "status: " << (ok() ? "ok" : "FAIL") << "\n";
  for (const auto& f : failures()) os << "failed: " << f << "\n";
  return os.str();
}

}  // namespace blie
