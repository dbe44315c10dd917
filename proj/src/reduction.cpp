#include "blie/reduction.hpp"

#include <Eigen/LU>

namespace blie {

Connection::Connection(TrivializedBundle bundle, std::optional<Deformation> deformation)
    : bundle_(std::move(bundle)), deformation_(std::move(deformation)) {
  if (!deformation_) return;
  if (deformation_->xi.size() != bundle_.h_dim()) throw ReductionError("deformation xi has the wrong dimension");
  if (deformation_->b_form && bundle_.mode() == FrameMode::classical)
    throw ReductionError("a dphi/phi deformation is singular in classical mode");
  const std::string& phi = bundle_.pair().phi;
  for (const auto& v : free_variables(deformation_->c))
    if (v != phi) throw ReductionError("deformation c may only depend on '" + phi + "'");
  std::vector<std::string> vars{phi};
  c_ = CompiledExpr(deformation_->c, vars);
}

std::string Connection::tag() const {
  if (!deformation_) return "default";
  return deformation_->b_form ? "b-deformed" : "smooth-deformed";
}

Eigen::VectorXd Connection::operator()(const Eigen::VectorXd& q, const Eigen::VectorXd& v) const {
  return matrix<double>(q) * v;
}

AxiomResiduals connection_axioms(const Connection& theta, int samples, std::uint64_t seed) {
  const TrivializedBundle& b = theta.bundle();
  const int n = b.base_dim();
  const int m = b.h_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  AxiomResiduals r;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd q = b.sample_base(rng, s % 5 == 0);
    Eigen::VectorXd xi(m), v(n);
    for (int i = 0; i < m; ++i) xi(i) = g(rng);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    Eigen::MatrixXd th = theta.matrix<double>(q);
    r.reproducing = std::max(r.reproducing, (th * b.zeta(q, xi) - xi).cwiseAbs().maxCoeff());

    Eigen::VectorXd h = b.sample_acting(rng, q);
    Eigen::MatrixXd hm = b.subgroup().matrix(h);
    Eigen::VectorXd qp = b.translate_base<double>(hm, q);
    Eigen::MatrixXd a = b.translation_jacobian<double>(hm, q);
    Eigen::VectorXd lhs = theta.matrix<double>(qp) * (a * v);
    Eigen::VectorXd rhs = adjoint_matrix<double>(b.subgroup(), h) * (th * v);
    r.equivariance = std::max(r.equivariance, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return r;
}

Connection make_connection(const TrivializedBundle& bundle, std::optional<Deformation> deformation, double tolerance) {
  Connection theta(bundle, std::move(deformation));
  AxiomResiduals r = connection_axioms(theta, 20, 1);
  if (r.reproducing > tolerance) throw ReductionError("connection does not reproduce fundamental fields");
  if (r.equivariance > tolerance) throw ReductionError("connection is not Ad-equivariant");
  return theta;
}

Eigen::VectorXd horizontal_projection(const Connection& theta, const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
  return theta.bundle().zeta(q, theta(q, v));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> phi_theta(const Connection& theta, const Eigen::VectorXd& q,
                                                      const Eigen::VectorXd& v) {
  Eigen::VectorXd xi = theta(q, v);
  return {v - theta.bundle().zeta(q, xi), xi};
}

Eigen::VectorXd phi_theta_inverse(const Connection& theta, const Eigen::VectorXd& q, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& xi) {
  return u + theta.bundle().zeta(q, xi);
}

Eigen::MatrixXd psi_jacobian(const Connection& theta, const Eigen::VectorXd& x) {
  const TrivializedBundle& b = theta.bundle();
  const int d = 2 * b.base_dim();
  VectorX<Jet> xj = frame_jets(x, b.phi_index(), b.mode());
  VectorX<Jet> y = psi_theta<Jet>(theta, xj);
  Eigen::MatrixXd out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = derivative_of(y(i), j);
  out.row(b.phi_index()).setZero();
  out(b.phi_index(), b.phi_index()) = 1.0;
  return out;
}

Eigen::Vector2d project_annihilator(const Eigen::VectorXd& q, double p) { return {q(q.size() - 1), p}; }

namespace {

// lambda^theta components on the target frame, as jets seeded along it.
VectorX<Jet> lambda_jets(const Connection& theta, const Eigen::VectorXd& y) {
  const TrivializedBundle& b = theta.bundle();
  const int n = b.base_dim();
  const int m = b.h_dim();
  VectorX<Jet> yj = frame_jets(y, b.phi_index(), b.mode());
  VectorX<Jet> q = yj.head(n);
  VectorX<Jet> mu = yj.tail(m);
  VectorX<Jet> l = VectorX<Jet>::Zero(2 * n);
  l.head(n) = theta.matrix<Jet>(q).transpose() * mu;
  return l;
}

}  // namespace

double lambda_theta(const Connection& theta, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const TrivializedBundle& b = theta.bundle();
  const int n = b.base_dim();
  Eigen::VectorXd q = y.head(n);
  Eigen::VectorXd mu = y.tail(b.h_dim());
  return mu.dot(theta(q, w.head(n)));
}

Eigen::MatrixXd d_lambda_theta(const Connection& theta, const Eigen::VectorXd& y) {
  VectorX<Jet> l = lambda_jets(theta, y);
  const auto d = static_cast<int>(y.size());
  Eigen::MatrixXd out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = derivative_of(l(j), i) - derivative_of(l(i), j);
  return out;
}

Eigen::MatrixXd coupled_form(const Connection& theta, const Eigen::VectorXd& y) {
  const int phi = theta.bundle().phi_index();
  Eigen::MatrixXd w = -d_lambda_theta(theta, y);
  w(phi, phi + 1) += 1.0;
  w(phi + 1, phi) -= 1.0;
  return w;
}

double coupling_identity_residual(const Connection& theta, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                                  const Eigen::VectorXd& w) {
  Eigen::MatrixXd omega = theta.bundle().canonical_matrix();
  Eigen::VectorXd y = psi_theta<double>(theta, x);
  Eigen::MatrixXd j = psi_jacobian(theta, x);
  double lhs = v.dot(omega * w);
  double rhs = (j * v).dot(coupled_form(theta, y) * (j * w));
  return std::abs(lhs - rhs);
}

double coupling_identity_residual(const Connection& theta, const Eigen::VectorXd& x) {
  Eigen::MatrixXd omega = theta.bundle().canonical_matrix();
  Eigen::VectorXd y = psi_theta<double>(theta, x);
  Eigen::MatrixXd j = psi_jacobian(theta, x);
  return (j.transpose() * coupled_form(theta, y) * j - omega).cwiseAbs().maxCoeff();
}

std::vector<std::string> reduced_coordinates(const TrivializedBundle& bundle) {
  std::vector<std::string> out = bundle.subgroup().algebra().dual_coordinate_names();
  out.push_back(bundle.pair().phi);
  out.emplace_back("p");
  return out;
}

ReducedPoisson reduced_poisson(const TrivializedBundle& bundle) {
  ReducedPoisson r;
  r.coords = reduced_coordinates(bundle);
  r.h_dim = bundle.h_dim();
  r.bivector = PoissonBivector(r.coords);
  const LieAlgebra& alg = bundle.subgroup().algebra();
  const int m = r.h_dim;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Expr e;
      for (int k = 0; k < m; ++k)
        if (!alg.c(i, j, k).is_zero()) e = e - Expr(alg.c(i, j, k)) * Expr::variable(r.coords[static_cast<std::size_t>(k)]);
      if (!e.is_zero()) r.bivector.set(i, j, e);
    }
  r.bivector.set(m, m + 1, bundle.mode() == FrameMode::b ? Expr::variable(bundle.pair().phi) : Expr(1));
  return r;
}

ScalarField invariant_field(const TrivializedBundle& bundle, const Expr& f_red) {
  auto b = std::make_shared<const TrivializedBundle>(bundle);
  auto tape = std::make_shared<const CompiledExpr>(f_red, reduced_coordinates(bundle));
  return ScalarField::from([b, tape](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    VectorX<S> r = reduced_point<S>(*b, VectorX<S>(x));
    return (*tape)(r);
  });
}

double invariance_residual(const TrivializedBundle& bundle, const ScalarField& F, const Eigen::VectorXd& x,
                           int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double f0 = F(x);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd h = bundle.sample_acting(rng, x);
    worst = std::max(worst, std::abs(F(bundle.lift(h, x)) - f0));
  }
  return worst;
}

double reduced_bracket_via_invariants(const TrivializedBundle& bundle, const ScalarField& F, const ScalarField& G,
                                      const Eigen::VectorXd& x) {
  if (invariance_residual(bundle, F, x, 4, 1) > 1e-8 || invariance_residual(bundle, G, x, 4, 2) > 1e-8)
    throw ReductionError("bracket needs H-invariant functions");
  return bundle.bracket(F, G, x);
}

double reduced_bracket_theta(const Connection& theta, const Expr& f_red, const Expr& g_red, const Eigen::VectorXd& y) {
  const TrivializedBundle& b = theta.bundle();
  std::vector<std::string> coords = reduced_coordinates(b);
  CompiledExpr f(f_red, coords);
  CompiledExpr g(g_red, coords);
  VectorX<Jet> yj = frame_jets(y, b.phi_index(), b.mode());
  VectorX<Jet> r = reduced_point<Jet>(b, psi_theta_inverse<Jet>(theta, yj));
  Jet fv = f(r);
  Jet gv = g(r);
  const auto d = static_cast<int>(y.size());
  Eigen::VectorXd df(d), dg(d);
  for (int i = 0; i < d; ++i) {
    df(i) = derivative_of(fv, i);
    dg(i) = derivative_of(gv, i);
  }
  Eigen::MatrixXd pi = coupled_form(theta, y).transpose().fullPivLu().inverse();
  return df.dot(pi * dg);
}

}  // namespace blie
