#pragma once

#include <optional>
#include <utility>

#include "blie/blift.hpp"

namespace blie {

class ReductionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// theta' = theta + Ad_h xi (x) c(phi) dphi, or (x) c(phi) dphi/phi when b_form.
struct Deformation {
  Eigen::VectorXd xi;
  Expr c;
  bool b_form = false;
};

/// Principal H-connection on the trivialized chart, stored as the m x n
/// matrix of theta on the base b-frame (d/dq_H, s(phi) d/dphi).
class Connection {
 public:
  Connection() = default;
  explicit Connection(TrivializedBundle bundle, std::optional<Deformation> deformation = {});

  const TrivializedBundle& bundle() const { return bundle_; }
  const std::optional<Deformation>& deformation() const { return deformation_; }
  std::string tag() const;

  template <typename S>
  MatrixX<S> matrix(const VectorX<S>& q) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& q, const Eigen::VectorXd& v) const;

 private:
  TrivializedBundle bundle_;
  std::optional<Deformation> deformation_;
  CompiledExpr c_;
};

struct AxiomResiduals {
  double reproducing = 0.0;
  double equivariance = 0.0;
};

AxiomResiduals connection_axioms(const Connection& theta, int samples, std::uint64_t seed);

/// Builds a connection and checks both axioms on seeded samples; throws
/// ReductionError when a residual exceeds `tolerance`.
Connection make_connection(const TrivializedBundle& bundle, std::optional<Deformation> deformation = {},
                           double tolerance = 1e-8);

// pi_H(v) = zeta^{theta(v)}.
Eigen::VectorXd horizontal_projection(const Connection& theta, const Eigen::VectorXd& q, const Eigen::VectorXd& v);

// v -> (v - zeta(theta v), theta v) and back.
std::pair<Eigen::VectorXd, Eigen::VectorXd> phi_theta(const Connection& theta, const Eigen::VectorXd& q,
                                                      const Eigen::VectorXd& v);
Eigen::VectorXd phi_theta_inverse(const Connection& theta, const Eigen::VectorXd& q, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& xi);

/// Coupled coordinates y = (q_H, phi, p, mu) of alpha at q: the annihilator
/// part is p e^phi and mu = alpha o zeta.
template <typename S>
VectorX<S> psi_theta(const Connection& theta, const VectorX<S>& x);
template <typename S>
VectorX<S> psi_theta_inverse(const Connection& theta, const VectorX<S>& y);

// Frame Jacobian of psi_theta at x; the phi row is structural.
Eigen::MatrixXd psi_jacobian(const Connection& theta, const Eigen::VectorXd& x);

/// (phi, p) of an annihilator element p e^phi at any base point.
Eigen::Vector2d project_annihilator(const Eigen::VectorXd& q, double p);

/// lambda^theta at y applied to a target frame vector w.
double lambda_theta(const Connection& theta, const Eigen::VectorXd& y, const Eigen::VectorXd& w);
// Frame matrix of d lambda^theta at y.
Eigen::MatrixXd d_lambda_theta(const Connection& theta, const Eigen::VectorXd& y);
// Frame matrix of pi^* omega_{G/H} - d lambda^theta at y.
Eigen::MatrixXd coupled_form(const Connection& theta, const Eigen::VectorXd& y);

double coupling_identity_residual(const Connection& theta, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                                  const Eigen::VectorXd& w);
// Max entry of Dpsi^T M Dpsi - Omega_G.
double coupling_identity_residual(const Connection& theta, const Eigen::VectorXd& x);

/// Reduced coordinates (mu_<label>, phi, p).
std::vector<std::string> reduced_coordinates(const TrivializedBundle& bundle);

/// R(x) = (nu, phi, alpha_phi) with the body momentum nu = Ad_h^T mu.
template <typename S>
VectorX<S> reduced_point(const TrivializedBundle& bundle, const VectorX<S>& x);

struct ReducedPoisson {
  std::vector<std::string> coords;
  int h_dim = 0;
  PoissonBivector bivector;
};

/// -Lie-Poisson on h* plus phi d_phi ^ d_p (d_phi ^ d_p in classical mode).
ReducedPoisson reduced_poisson(const TrivializedBundle& bundle);

/// F_red o R as a field on the cotangent chart.
ScalarField invariant_field(const TrivializedBundle& bundle, const Expr& f_red);

double invariance_residual(const TrivializedBundle& bundle, const ScalarField& F, const Eigen::VectorXd& x,
                           int samples, std::uint64_t seed);

/// Upstairs canonical bracket of H-invariant fields; throws ReductionError
/// when either field is not invariant to 1e-8 on a few lifts of x.
double reduced_bracket_via_invariants(const TrivializedBundle& bundle, const ScalarField& F, const ScalarField& G,
                                      const Eigen::VectorXd& x);

/// Bracket of F_red, G_red through the coupled coordinates of theta at y.
double reduced_bracket_theta(const Connection& theta, const Expr& f_red, const Expr& g_red, const Eigen::VectorXd& y);

// ---------------------------------------------------------------------------

template <typename S>
MatrixX<S> Connection::matrix(const VectorX<S>& q) const {
  const MatrixGroup& H = bundle_.subgroup();
  const int m = bundle_.h_dim();
  const int n = bundle_.base_dim();
  VectorX<S> qh = q.head(m);
  MatrixX<S> h = H.matrix(qh);
  MatrixX<S> hinv = inverse_of<S>(h);
  auto jac = H.jacobian(qh);
  MatrixX<S> th = MatrixX<S>::Zero(m, n);
  for (int k = 0; k < m; ++k) th.col(k) = H.expand<S>(MatrixX<S>(jac[static_cast<std::size_t>(k)] * hinv));
  if (deformation_) {
    const S phi = q(m);
    VectorX<S> one(1);
    one(0) = phi;
    S c = c_(one);
    S factor = deformation_->b_form ? S(1.0) : bundle_.phi_scale(phi);
    VectorX<S> ad = adjoint_matrix<S>(H, qh) * deformation_->xi.cast<S>();
    th.col(m) = ad * (c * factor);
  }
  return th;
}

template <typename S>
VectorX<S> psi_theta(const Connection& theta, const VectorX<S>& x) {
  const TrivializedBundle& b = theta.bundle();
  const int n = b.base_dim();
  const int m = b.h_dim();
  VectorX<S> q = x.head(n);
  VectorX<S> alpha = x.tail(n);
  VectorX<S> mu = b.zeta_matrix<S>(q).transpose() * alpha;
  VectorX<S> back = theta.matrix<S>(q).transpose() * mu;
  VectorX<S> y(2 * n);
  y.head(n) = q;
  y(n) = alpha(m) - back(m);
  y.tail(m) = mu;
  return y;
}

template <typename S>
VectorX<S> psi_theta_inverse(const Connection& theta, const VectorX<S>& y) {
  const TrivializedBundle& b = theta.bundle();
  const int n = b.base_dim();
  const int m = b.h_dim();
  VectorX<S> q = y.head(n);
  VectorX<S> mu = y.tail(m);
  VectorX<S> x(2 * n);
  x.head(n) = q;
  x.tail(n) = theta.matrix<S>(q).transpose() * mu;
  x(n + m) += y(n);
  return x;
}

template <typename S>
VectorX<S> reduced_point(const TrivializedBundle& bundle, const VectorX<S>& x) {
  const int n = bundle.base_dim();
  const int m = bundle.h_dim();
  VectorX<S> qh = x.head(m);
  VectorX<S> mu = bundle.moment<S>(x);
  VectorX<S> out(m + 2);
  out.head(m) = adjoint_matrix<S>(bundle.subgroup(), qh).transpose() * mu;
  out(m) = x(m);
  out(m + 1) = x(n + m);
  return out;
}

}  // namespace blie
