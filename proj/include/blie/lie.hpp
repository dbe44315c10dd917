#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blie/expr.hpp"
#include "blie/rational.hpp"
#include "blie/scalar.hpp"

namespace blie {

class LieError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense matrix of exact rationals, row-major.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}
  static RationalMatrix unit(int rows, int cols, int i, int j, Rational v = Rational(1));

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  const Rational& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator*(const Rational& s, const RationalMatrix& a);
  friend bool operator==(const RationalMatrix& a, const RationalMatrix& b) = default;

  bool is_zero() const;
  Eigen::MatrixXd to_double() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> data_;
};

RationalMatrix commutator(const RationalMatrix& a, const RationalMatrix& b);

/// Lie algebra given by structure constants [e_i, e_j] = sum_k c^k_ij e_k.
class LieAlgebra {
 public:
  LieAlgebra() = default;
  LieAlgebra(int dim, std::vector<std::string> labels);

  int dim() const { return dim_; }
  const std::vector<std::string>& labels() const { return labels_; }

  const Rational& c(int i, int j, int k) const { return c_[index(i, j, k)]; }
  // Sets c^k_ij and c^k_ji = -value.
  void set_bracket(int i, int j, int k, const Rational& value);
  // Sets the single entry c^k_ij, leaving c^k_ji untouched.
  void set_raw(int i, int j, int k, const Rational& value) { c_[index(i, j, k)] = value; }

  template <typename Scalar>
  VectorX<Scalar> bracket(const VectorX<Scalar>& x, const VectorX<Scalar>& y) const;

  // Exact checks. Each returns the offending index tuples (empty when valid).
  std::vector<std::array<int, 3>> antisymmetry_violations() const;
  std::vector<std::array<int, 4>> jacobi_violations() const;

  // Basis indices spanning the center, computed exactly.
  std::vector<std::vector<Rational>> center_basis() const;

  // Names mu_<label> of the dual coordinates.
  std::vector<std::string> dual_coordinate_names() const;

  friend bool operator==(const LieAlgebra& a, const LieAlgebra& b) {
    return a.dim_ == b.dim_ && a.c_ == b.c_;
  }

 private:
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>((i * dim_ + j) * dim_ + k);
  }

  int dim_ = 0;
  std::vector<std::string> labels_;
  std::vector<Rational> c_;
};

template <typename Scalar>
VectorX<Scalar> LieAlgebra::bracket(const VectorX<Scalar>& x, const VectorX<Scalar>& y) const {
  if (x.size() != dim_ || y.size() != dim_) throw LieError("bracket: dimension mismatch");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        const Rational& cij = c(i, j, k);
        if (!cij.is_zero()) out(k) += Scalar(cij.to_double()) * x(i) * y(j);
      }
  return out;
}

/// Brute-force structure constants from matrix commutators, in exact
/// arithmetic. Throws LieError when a commutator leaves the span.
LieAlgebra structure_constants_from_matrices(std::span<const RationalMatrix> basis,
                                             std::vector<std::string> labels);

/// Exact coordinates of `m` in the span of `basis`; nullopt when outside.
std::optional<std::vector<Rational>> coordinates_in_span(std::span<const RationalMatrix> basis,
                                                         const RationalMatrix& m);

/// CSV table: header "i,j,<labels...>", one row per pair i<j with the
/// coefficients of [e_i, e_j].
std::string bracket_table_csv(const LieAlgebra& algebra);

/// Minus Lie-Poisson bracket {F,G}(mu) = -sum c^k_ij mu_k dF/dmu_i dG/dmu_j
/// with F, G written in the coordinates `names` (default mu_<label>).
Expr lie_poisson_expr(const LieAlgebra& algebra, const Expr& f, const Expr& g,
                      std::span<const std::string> names);
double lie_poisson(const LieAlgebra& algebra, const Expr& f, const Expr& g, const Eigen::VectorXd& mu);

/// Polynomial Casimirs of the minus Lie-Poisson bracket: the linear ones
/// from the center, or, when the center is trivial, the quadratic ones.
std::vector<Expr> casimir_candidates(const LieAlgebra& algebra, std::span<const std::string> names = {});

/// Closed-form exp(t E) as an Expr matrix for a nilpotent E or for E with
/// E^3 = -E (rotation generators).
std::vector<Expr> exp_generator(const RationalMatrix& generator, const Expr& t);

std::vector<Expr> multiply(std::span<const Expr> a, std::span<const Expr> b, int m);

/// Matrix Lie group given by an Expr chart p -> M(p), with chart(0) = I.
class MatrixGroup {
 public:
  using InverseChart = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

  MatrixGroup() = default;
  MatrixGroup(std::string name, int matrix_size, std::vector<std::string> params, std::vector<Expr> chart,
              std::vector<RationalMatrix> basis, std::vector<std::string> labels,
              InverseChart inverse_chart = {});

  const std::string& name() const { return name_; }
  int matrix_size() const { return m_; }
  int dim() const { return static_cast<int>(params_.size()); }
  const std::vector<std::string>& params() const { return params_; }
  const std::vector<Expr>& chart() const { return chart_; }
  const std::vector<RationalMatrix>& basis() const { return basis_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const LieAlgebra& algebra() const { return algebra_; }

  // Circle-valued parameters: period > 0 means group operations reduce the
  // parameter into [lower, lower + period).
  void set_period(int param, double period, double lower = 0.0) {
    periods_[static_cast<std::size_t>(param)] = period;
    period_lower_[static_cast<std::size_t>(param)] = lower;
  }
  double period(int param) const { return periods_[static_cast<std::size_t>(param)]; }
  Eigen::VectorXd wrap(Eigen::VectorXd p) const;

  template <typename Scalar>
  MatrixX<Scalar> matrix(const VectorX<Scalar>& p) const;

  // d/dp_i of the chart matrix, for each parameter.
  template <typename Scalar>
  std::vector<MatrixX<Scalar>> jacobian(const VectorX<Scalar>& p) const;

  // Inverse chart. `wrap` reduces circle parameters into [0, period).
  Eigen::VectorXd params_of(const Eigen::MatrixXd& m, bool wrap = false) const;

  // Inverse chart on jets: value from the double inverse, first derivatives
  // from one linearized correction (exact to first order).
  VectorX<Jet> params_of(const MatrixX<Jet>& m) const;

  // Coordinates (in the chart) of a tangent matrix T at chart(p).
  template <typename Scalar>
  VectorX<Scalar> tangent_to_params(const VectorX<Scalar>& p, const MatrixX<Scalar>& t) const;

  // Coordinates of a matrix in the Lie algebra basis.
  template <typename Scalar>
  VectorX<Scalar> expand(const MatrixX<Scalar>& x, double* residual = nullptr) const;

  template <typename Scalar>
  MatrixX<Scalar> algebra_matrix(const VectorX<Scalar>& coeffs) const;

  const Eigen::MatrixXd& basis_pinv() const { return basis_pinv_; }

 private:
  Eigen::VectorXd newton_inverse(const Eigen::MatrixXd& m) const;

  std::string name_;
  int m_ = 0;
  std::vector<std::string> params_;
  std::vector<Expr> chart_;
  std::vector<RationalMatrix> basis_;
  std::vector<std::string> labels_;
  InverseChart inverse_chart_;
  std::vector<double> periods_;
  std::vector<double> period_lower_;
  LieAlgebra algebra_;
  std::vector<CompiledExpr> chart_tape_;
  std::vector<std::vector<CompiledExpr>> jacobian_tape_;
  Eigen::MatrixXd basis_flat_;   // m^2 x d
  Eigen::MatrixXd basis_pinv_;   // d x m^2
};

template <typename Scalar>
MatrixX<Scalar> MatrixGroup::matrix(const VectorX<Scalar>& p) const {
  MatrixX<Scalar> out(m_, m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) out(i, j) = chart_tape_[static_cast<std::size_t>(i * m_ + j)](p);
  return out;
}

template <typename Scalar>
std::vector<MatrixX<Scalar>> MatrixGroup::jacobian(const VectorX<Scalar>& p) const {
  std::vector<MatrixX<Scalar>> out;
  out.reserve(params_.size());
  for (const auto& tapes : jacobian_tape_) {
    MatrixX<Scalar> d(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) d(i, j) = tapes[static_cast<std::size_t>(i * m_ + j)](p);
    out.push_back(std::move(d));
  }
  return out;
}

template <typename Scalar>
VectorX<Scalar> MatrixGroup::tangent_to_params(const VectorX<Scalar>& p, const MatrixX<Scalar>& t) const {
  auto jac = jacobian(p);
  const int d = dim();
  MatrixX<Scalar> a(m_ * m_, d);
  VectorX<Scalar> b(m_ * m_);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) a(i * m_ + j, k) = jac[static_cast<std::size_t>(k)](i, j);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) b(i * m_ + j) = t(i, j);
  return solve_least_squares<Scalar>(a, b);
}

template <typename Scalar>
VectorX<Scalar> MatrixGroup::expand(const MatrixX<Scalar>& x, double* residual) const {
  VectorX<Scalar> flat(m_ * m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) flat(i * m_ + j) = x(i, j);
  VectorX<Scalar> coeffs = basis_pinv_.cast<Scalar>() * flat;
  if (residual) {
    VectorX<Scalar> r = basis_flat_.cast<Scalar>() * coeffs - flat;
    double m = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) m = std::max(m, std::abs(value_of(r(i))));
    *residual = m;
  }
  return coeffs;
}

template <typename Scalar>
MatrixX<Scalar> MatrixGroup::algebra_matrix(const VectorX<Scalar>& coeffs) const {
  VectorX<Scalar> flat = basis_flat_.cast<Scalar>() * coeffs;
  MatrixX<Scalar> out(m_, m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) out(i, j) = flat(i * m_ + j);
  return out;
}

/// Matrix exponential by scaling and squaring of the power series; the
/// series terminates exactly for nilpotent arguments.
template <typename Scalar>
MatrixX<Scalar> matrix_exp(const MatrixX<Scalar>& x) {
  const Eigen::Index n = x.rows();
  double norm = values_of(x).norm();
  int squarings = 0;
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  MatrixX<Scalar> a = x / Scalar(std::ldexp(1.0, squarings));
  MatrixX<Scalar> sum = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> term = MatrixX<Scalar>::Identity(n, n);
  for (int k = 1; k < 40; ++k) {
    term = (term * a) / Scalar(static_cast<double>(k));
    double tn = values_of(term).norm();
    sum += term;
    if (tn == 0.0 || tn < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Group operations in chart parameters. Circle parameters are wrapped.
Eigen::VectorXd group_mul(const MatrixGroup& g, const Eigen::VectorXd& p, const Eigen::VectorXd& q);
Eigen::VectorXd group_inv(const MatrixGroup& g, const Eigen::VectorXd& p);
Eigen::VectorXd group_exp(const MatrixGroup& g, const Eigen::VectorXd& x);
// Logarithm of a near-identity matrix, in Lie algebra coordinates. Throws
// LieError when the series does not converge.
Eigen::VectorXd group_log(const MatrixGroup& g, const Eigen::MatrixXd& m);

// Ad_g X and Ad*_g mu, with <Ad*_g mu, X> = <mu, Ad_{g^-1} X>.
Eigen::VectorXd adjoint(const MatrixGroup& g, const Eigen::VectorXd& params, const Eigen::VectorXd& x);
Eigen::VectorXd coadjoint_star(const MatrixGroup& g, const Eigen::VectorXd& params, const Eigen::VectorXd& mu);

template <typename Scalar>
MatrixX<Scalar> adjoint_matrix(const MatrixGroup& g, const VectorX<Scalar>& params) {
  MatrixX<Scalar> m = g.matrix(params);
  MatrixX<Scalar> minv = inverse_of<Scalar>(m);
  const int d = g.dim();
  MatrixX<Scalar> out(d, d);
  for (int i = 0; i < d; ++i) {
    MatrixX<Scalar> e = g.basis()[static_cast<std::size_t>(i)].to_double().cast<Scalar>();
    double residual = 0.0;
    out.col(i) = g.expand<Scalar>(m * e * minv, &residual);
    if (residual > 1e-10) throw LieError("adjoint: result not in span of the basis");
  }
  return out;
}

/// A b-Lie group (G, H) with H = {phi = 0} and the semilocal trivialization
/// g = h * exp(phi E) over a transverse generator E.
struct BLieGroupPair {
  std::string name;
  MatrixGroup group;
  MatrixGroup subgroup;
  std::vector<int> subgroup_basis;  // indices of H's basis inside G's basis
  int transverse_generator = 0;     // index of E inside G's basis
  std::string phi;                  // name of the transverse coordinate
  std::vector<Expr> section;        // exp(phi E), m x m
  double phi_range = 1.0;           // V = (-phi_range, phi_range)
  double phi_sample = 1.0;          // sampling half-width for phi
  std::vector<std::pair<double, double>> subgroup_box;     // sampling box for H params
  std::vector<std::pair<double, double>> subgroup_domain;  // chart validity of H params
  std::string quotient;             // description of G/H

  int dim() const { return group.dim(); }
  // Coordinates of the trivialized chart: H params followed by phi.
  std::vector<std::string> coordinates() const;
  // The matrix h(q_H) * exp(phi E) as Exprs in coordinates().
  std::vector<Expr> trivialized_chart() const;
  bool in_domain(const Eigen::VectorXd& subgroup_params) const;
};

/// Builtin pairs: "se2", "galilean", "heisenberg_q(n)" (also "heisenberg_q" for n = 1).
BLieGroupPair builtin(std::string_view name);

}  // namespace blie
