#pragma once

#include <functional>
#include <memory>

#include "blie/bcalc.hpp"
#include "blie/lie.hpp"

namespace blie {

/// b-cotangent chart over a base b-chart: coordinates (z_1..z_n, p_1..p_n)
/// with p_i dual to the b-frame (p of the defining slot pairs with f d/df).
/// The total space is a b-chart with the same defining coordinate f.
class BCotangentChart {
 public:
  explicit BCotangentChart(BChart base, std::vector<std::string> fiber_names = {});

  const BChart& base() const { return base_; }
  const BChart& total() const { return total_; }
  int base_dim() const { return base_.dim(); }

 private:
  BChart base_;
  BChart total_;
};

/// lambda = p_f df/f + sum p_i dz_i.
BForm liouville(const BCotangentChart& c);
/// omega = -d lambda = df/f ^ dp_f + sum dz_i ^ dp_i.
BForm canonical_bsymplectic(const BCotangentChart& c);

enum class FrameMode { b, classical };

/// Jets seeded along the frame fields of a chart: slot j moves along E_j, so
/// the derivative of F in slot j is E_j F. The defining slot is scaled by the
/// value of f in b-mode.
template <typename Derived>
VectorX<Jet> frame_jets(const Eigen::MatrixBase<Derived>& x, int defining, FrameMode mode) {
  const auto n = static_cast<int>(x.size());
  VectorX<Jet> out(n);
  for (int j = 0; j < n; ++j) {
    double seed = (j == defining && mode == FrameMode::b) ? x(j) : 1.0;
    out(j) = make_jet(x(j), n, j, seed);
  }
  return out;
}

/// Real function on a chart, evaluable on doubles and on jets.
class ScalarField {
 public:
  ScalarField() = default;

  template <typename F>
  static ScalarField from(F f) {
    ScalarField s;
    s.value_ = [f](const Eigen::VectorXd& x) { return f(x); };
    s.jet_ = [f](const VectorX<Jet>& x) { return f(x); };
    return s;
  }
  static ScalarField from_expr(const Expr& e, std::vector<std::string> coords);

  double operator()(const Eigen::VectorXd& x) const { return value_(x); }
  Jet operator()(const VectorX<Jet>& x) const { return jet_(x); }

 private:
  std::function<double(const Eigen::VectorXd&)> value_;
  std::function<Jet(const VectorX<Jet>&)> jet_;
};

template <typename S>
VectorX<S> params_in(const MatrixGroup& g, const MatrixX<S>& m) {
  return g.params_of(m);
}

/// The semilocal trivialization U = H x V of a b-Lie group pair, g(q) =
/// h(q_H) exp(phi E), with H acting by left translation on the H-factor,
/// and its b-cotangent bundle with points x = (q_H, phi, alpha_H, alpha_phi).
/// alpha is expressed in the base b-frame (d/dq_H, s(phi) d/dphi), where
/// s(phi) = phi in b-mode and 1 in classical mode.
class TrivializedBundle {
 public:
  explicit TrivializedBundle(BLieGroupPair pair, FrameMode mode = FrameMode::b);

  const BLieGroupPair& pair() const { return pair_; }
  const MatrixGroup& subgroup() const { return pair_.subgroup; }
  FrameMode mode() const { return mode_; }
  int base_dim() const { return n_; }
  int h_dim() const { return n_ - 1; }
  int phi_index() const { return n_ - 1; }
  const BCotangentChart& cotangent() const { return cotangent_; }
  const BChart& chart() const { return cotangent_.total(); }

  template <typename S>
  S phi_scale(const S& phi) const {
    return mode_ == FrameMode::b ? phi : S(1.0);
  }

  // Sampling: H-parameters from the pair's box, phi from
  // phi_floor <= |phi| <= phi_sample (or exactly 0 when on_z).
  Eigen::VectorXd sample_base(std::mt19937_64& rng, bool on_z = false, double phi_floor = 0.05) const;
  Eigen::VectorXd sample_point(std::mt19937_64& rng, bool on_z = false, double phi_floor = 0.05) const;
  Eigen::VectorXd sample_subgroup(std::mt19937_64& rng, double half_width = 0.5) const;
  // An element h with L_h q still inside the chart domain.
  Eigen::VectorXd sample_acting(std::mt19937_64& rng, const Eigen::VectorXd& q, double half_width = 0.5) const;

  // q -> L_h q, with h given as a matrix of H.
  template <typename S>
  VectorX<S> translate_base(const MatrixX<S>& hmat, const VectorX<S>& q) const;
  // Frame matrix of the tangent map of L_h at q (n x n, phi slot unchanged).
  template <typename S>
  MatrixX<S> translation_jacobian(const MatrixX<S>& hmat, const VectorX<S>& q) const;
  // Cotangent lift (L_{h^-1})^*: covectors at q to covectors at h q.
  template <typename S>
  VectorX<S> lift(const MatrixX<S>& hmat, const VectorX<S>& x) const;
  Eigen::VectorXd lift(const Eigen::VectorXd& h_params, const Eigen::VectorXd& x) const;

  // b-frame components (n x m) of the fundamental fields zeta^{e_i} at q.
  template <typename S>
  MatrixX<S> zeta_matrix(const VectorX<S>& q) const;
  Eigen::VectorXd zeta(const Eigen::VectorXd& q, const Eigen::VectorXd& xi) const;

  // mu(x)_i = <lambda_x, e_i^#> = alpha(zeta^{e_i}).
  template <typename S>
  VectorX<S> moment(const VectorX<S>& x) const;

  // Generator X# of the lifted action, in the b-frame of the cotangent chart,
  // from differentiating t -> lift(exp(tX)) x at t = 0.
  Eigen::VectorXd fundamental_field(const Eigen::VectorXd& xi, const Eigen::VectorXd& x) const;

  // Frame Jacobian (2n x 2n) of the lift; the phi row is structural.
  Eigen::MatrixXd lift_jacobian(const Eigen::VectorXd& h_params, const Eigen::VectorXd& x) const;

  // Canonical frame matrix of omega = sum e^{q} ^ e^{alpha}.
  Eigen::MatrixXd canonical_matrix() const;

  // E_j F at x for every frame direction j.
  Eigen::VectorXd frame_gradient(const ScalarField& F, const Eigen::VectorXd& x) const;

  // {F, G} = sum_j (E_j F d_{alpha_j} G - d_{alpha_j} F E_j G).
  double bracket(const ScalarField& F, const ScalarField& G, const Eigen::VectorXd& x) const;

 private:
  template <typename S>
  MatrixX<S> tangent_coords(const VectorX<S>& qh, const std::vector<MatrixX<S>>& tangents) const;

  BLieGroupPair pair_;
  FrameMode mode_;
  int n_;
  BCotangentChart cotangent_;
};

// ---------------------------------------------------------------------------

template <typename S>
MatrixX<S> TrivializedBundle::tangent_coords(const VectorX<S>& qh, const std::vector<MatrixX<S>>& tangents) const {
  const MatrixGroup& H = pair_.subgroup;
  const int m = H.dim();
  const int ms = H.matrix_size();
  auto jac = H.jacobian(qh);
  MatrixX<S> a(ms * ms, m);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < ms; ++i)
      for (int j = 0; j < ms; ++j) a(i * ms + j, k) = jac[static_cast<std::size_t>(k)](i, j);
  MatrixX<S> normal = a.transpose() * a;
  MatrixX<S> out(m, static_cast<Eigen::Index>(tangents.size()));
  for (std::size_t c = 0; c < tangents.size(); ++c) {
    VectorX<S> b(ms * ms);
    for (int i = 0; i < ms; ++i)
      for (int j = 0; j < ms; ++j) b(i * ms + j) = tangents[c](i, j);
    VectorX<S> rhs = a.transpose() * b;
    out.col(static_cast<Eigen::Index>(c)) = solve_square<S>(normal, rhs);
  }
  return out;
}

template <typename S>
VectorX<S> TrivializedBundle::translate_base(const MatrixX<S>& hmat, const VectorX<S>& q) const {
  const int m = h_dim();
  VectorX<S> qh = q.head(m);
  MatrixX<S> prod = hmat * pair_.subgroup.matrix(qh);
  VectorX<S> out(n_);
  out.head(m) = params_in<S>(pair_.subgroup, prod);
  out(m) = q(m);
  return out;
}

template <typename S>
MatrixX<S> TrivializedBundle::translation_jacobian(const MatrixX<S>& hmat, const VectorX<S>& q) const {
  const int m = h_dim();
  VectorX<S> qh = q.head(m);
  VectorX<S> qp = translate_base(hmat, q);
  auto jac = pair_.subgroup.jacobian(qh);
  std::vector<MatrixX<S>> pushed;
  for (const auto& j : jac) pushed.push_back(hmat * j);
  MatrixX<S> a = MatrixX<S>::Zero(n_, n_);
  a.topLeftCorner(m, m) = tangent_coords<S>(VectorX<S>(qp.head(m)), pushed);
  a(m, m) = S(1.0);
  return a;
}

template <typename S>
VectorX<S> TrivializedBundle::lift(const MatrixX<S>& hmat, const VectorX<S>& x) const {
  VectorX<S> q = x.head(n_);
  VectorX<S> alpha = x.tail(n_);
  MatrixX<S> a = translation_jacobian(hmat, q);
  VectorX<S> out(2 * n_);
  out.head(n_) = translate_base(hmat, q);
  // alpha' = A^{-T} alpha
  MatrixX<S> at = a.transpose();
  out.tail(n_) = solve_square<S>(at, alpha);
  return out;
}

template <typename S>
MatrixX<S> TrivializedBundle::zeta_matrix(const VectorX<S>& q) const {
  const MatrixGroup& H = pair_.subgroup;
  const int m = h_dim();
  VectorX<S> qh = q.head(m);
  MatrixX<S> h = H.matrix(qh);
  std::vector<MatrixX<S>> tangents;
  for (int i = 0; i < m; ++i) tangents.push_back(H.basis()[static_cast<std::size_t>(i)].to_double().cast<S>() * h);
  MatrixX<S> z = MatrixX<S>::Zero(n_, m);
  z.topRows(m) = tangent_coords<S>(qh, tangents);
  return z;
}

template <typename S>
VectorX<S> TrivializedBundle::moment(const VectorX<S>& x) const {
  VectorX<S> q = x.head(n_);
  VectorX<S> alpha = x.tail(n_);
  return zeta_matrix<S>(q).transpose() * alpha;
}

}  // namespace blie
