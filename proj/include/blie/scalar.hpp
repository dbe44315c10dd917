#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

namespace blie {

// Forward-mode jet used to push exact first derivatives through compositions
// of Expr evaluation and small dense linear algebra.
inline constexpr int kMaxJetDirections = 32;
using JetDerivatives = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxJetDirections, 1>;
using Jet = Eigen::AutoDiffScalar<JetDerivatives>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

template <typename Derived>
Eigen::MatrixXd values_of(const Eigen::MatrixBase<Derived>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = value_of(m(i, j));
  return out;
}

// Directional derivative stored in slot `slot` of a jet vector.
inline double derivative_of(const Jet& x, int slot) {
  return slot < x.derivatives().size() ? x.derivatives()(slot) : 0.0;
}

// A jet with value `v` whose derivative along slot `slot` (of `directions`) is `seed`.
inline Jet make_jet(double v, int directions, int slot, double seed) {
  JetDerivatives d = JetDerivatives::Zero(directions);
  d(slot) = seed;
  return Jet(v, d);
}

inline Jet make_jet(double v, const JetDerivatives& d) { return Jet(v, d); }

// Solves the square system A x = b by Gaussian elimination with partial
// pivoting on the values. Works for double and Jet scalars alike.
template <typename Scalar>
VectorX<Scalar> solve_square(MatrixX<Scalar> a, VectorX<Scalar> b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    double best = std::abs(value_of(a(k, k)));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      double v = std::abs(value_of(a(i, k)));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) throw std::domain_error("singular system");
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      std::swap(b(k), b(piv));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      Scalar f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b(i) -= f * b(k);
    }
  }
  VectorX<Scalar> x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Scalar s = b(i);
    for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x(j);
    x(i) = s / a(i, i);
  }
  return x;
}

// Least-squares solution of the (tall, full column rank) system A x = b via
// the normal equations. Residual is returned through `residual` when given.
template <typename Scalar>
VectorX<Scalar> solve_least_squares(const MatrixX<Scalar>& a, const VectorX<Scalar>& b,
                                    double* residual = nullptr) {
  MatrixX<Scalar> ata = a.transpose() * a;
  VectorX<Scalar> atb = a.transpose() * b;
  VectorX<Scalar> x = solve_square<Scalar>(ata, atb);
  if (residual) {
    VectorX<Scalar> r = a * x - b;
    double m = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) m = std::max(m, std::abs(value_of(r(i))));
    *residual = m;
  }
  return x;
}

template <typename Scalar>
MatrixX<Scalar> inverse_of(const MatrixX<Scalar>& a) {
  const Eigen::Index n = a.rows();
  MatrixX<Scalar> out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    VectorX<Scalar> e = VectorX<Scalar>::Zero(n);
    e(j) = Scalar(1.0);
    out.col(j) = solve_square<Scalar>(a, e);
  }
  return out;
}

}  // namespace blie
