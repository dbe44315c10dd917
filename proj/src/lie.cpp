#include "blie/lie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace blie {

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<int> rref(std::vector<std::vector<Rational>>& a, int cols) {
  std::vector<int> pivots;
  int row = 0;
  const int rows = static_cast<int>(a.size());
  for (int col = 0; col < cols && row < rows; ++col) {
    int piv = -1;
    for (int i = row; i < rows; ++i)
      if (!a[i][col].is_zero()) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(a[row], a[piv]);
    Rational inv = Rational(1) / a[row][col];
    for (auto& v : a[row]) v *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == row || a[i][col].is_zero()) continue;
      Rational f = a[i][col];
      for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] -= f * a[row][j];
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

// Exact basis of {x : rows x = 0}.
std::vector<std::vector<Rational>> nullspace(std::vector<std::vector<Rational>> rows, int cols) {
  std::vector<int> pivots = rref(rows, cols);
  std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
  for (int p : pivots) is_pivot[p] = true;
  std::vector<std::vector<Rational>> basis;
  for (int free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(static_cast<std::size_t>(cols));
    v[free] = Rational(1);
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -rows[r][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

Expr rational_expr(const Rational& r) { return Expr(r); }

}  // namespace

// ---------------------------------------------------------------------------
// RationalMatrix

RationalMatrix RationalMatrix::unit(int rows, int cols, int i, int j, Rational v) {
  RationalMatrix m(rows, cols);
  m(i, j) = v;
  return m;
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.cols_ != b.rows_) throw LieError("matrix product: shape mismatch");
  RationalMatrix out(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i)
    for (int k = 0; k < a.cols_; ++k) {
      if (a(i, k).is_zero()) continue;
      for (int j = 0; j < b.cols_; ++j)
        if (!b(k, j).is_zero()) out(i, j) += a(i, k) * b(k, j);
    }
  return out;
}

RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw LieError("matrix sum: shape mismatch");
  RationalMatrix out(a);
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
  return out;
}

RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b) {
  return a + Rational(-1) * b;
}

RationalMatrix operator*(const Rational& s, const RationalMatrix& a) {
  RationalMatrix out(a);
  for (auto& v : out.data_) v *= s;
  return out;
}

bool RationalMatrix::is_zero() const {
  for (const auto& v : data_)
    if (!v.is_zero()) return false;
  return true;
}

Eigen::MatrixXd RationalMatrix::to_double() const {
  Eigen::MatrixXd out(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out(i, j) = (*this)(i, j).to_double();
  return out;
}

RationalMatrix commutator(const RationalMatrix& a, const RationalMatrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------
// LieAlgebra

LieAlgebra::LieAlgebra(int dim, std::vector<std::string> labels)
    : dim_(dim), labels_(std::move(labels)), c_(static_cast<std::size_t>(dim * dim * dim)) {
  if (dim < 0) throw LieError("negative dimension");
  if (labels_.empty())
    for (int i = 0; i < dim; ++i) labels_.push_back("e" + std::to_string(i + 1));
  if (static_cast<int>(labels_.size()) != dim) throw LieError("label count does not match dimension");
}

void LieAlgebra::set_bracket(int i, int j, int k, const Rational& value) {
  if (i == j && !value.is_zero()) throw LieError("[e_i, e_i] must vanish");
  c_[index(i, j, k)] = value;
  c_[index(j, i, k)] = -value;
}

std::vector<std::array<int, 3>> LieAlgebra::antisymmetry_violations() const {
  std::vector<std::array<int, 3>> out;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        if (!(c(i, j, k) == -c(j, i, k))) out.push_back({i, j, k});
  return out;
}

std::vector<std::array<int, 4>> LieAlgebra::jacobi_violations() const {
  std::vector<std::array<int, 4>> out;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        for (int l = 0; l < dim_; ++l) {
          Rational s;
          for (int m = 0; m < dim_; ++m) {
            if (!c(i, j, m).is_zero()) s += c(i, j, m) * c(m, k, l);
            if (!c(j, k, m).is_zero()) s += c(j, k, m) * c(m, i, l);
            if (!c(k, i, m).is_zero()) s += c(k, i, m) * c(m, j, l);
          }
          if (!s.is_zero()) out.push_back({i, j, k, l});
        }
  return out;
}

std::vector<std::vector<Rational>> LieAlgebra::center_basis() const {
  // x is central iff sum_i x_i c^k_ij = 0 for all j, k.
  std::vector<std::vector<Rational>> rows;
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < dim_; ++k) {
      std::vector<Rational> r(static_cast<std::size_t>(dim_));
      for (int i = 0; i < dim_; ++i) r[i] = c(i, j, k);
      rows.push_back(std::move(r));
    }
  return nullspace(std::move(rows), dim_);
}

std::vector<Expr> casimir_candidates(const LieAlgebra& algebra, std::span<const std::string> names) {
  const int d = algebra.dim();
  std::vector<std::string> fallback;
  if (names.empty()) {
    fallback = algebra.dual_coordinate_names();
    names = fallback;
  }
  auto mu = [&](int i) { return Expr::variable(names[static_cast<std::size_t>(i)]); };
  std::vector<Expr> out;
  for (const auto& z : algebra.center_basis()) {
    Expr e;
    for (int i = 0; i < d; ++i)
      if (!z[i].is_zero()) e = e + Expr(z[i]) * mu(i);
    out.push_back(e);
  }
  if (!out.empty()) return out;

  // C = sum_{a<=b} q_ab mu_a mu_b with {C, mu_i} = 0 for every i.
  std::vector<std::pair<int, int>> pairs;
  std::map<std::pair<int, int>, int> unknown;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      unknown[{a, b}] = static_cast<int>(pairs.size());
      pairs.emplace_back(a, b);
    }
  const int u = static_cast<int>(pairs.size());
  std::map<std::array<int, 3>, std::vector<Rational>> eqs;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const Rational& cji = algebra.c(j, i, k);
        if (cji.is_zero()) continue;
        for (int b = 0; b < d; ++b) {
          // d C / d mu_j = sum_b (j == b ? 2 : 1) q_{jb} mu_b
          int col = unknown[{std::min(j, b), std::max(j, b)}];
          auto& row = eqs[{i, std::min(b, k), std::max(b, k)}];
          if (row.empty()) row.assign(static_cast<std::size_t>(u), Rational(0));
          row[col] -= Rational(j == b ? 2 : 1) * cji;
        }
      }
  std::vector<std::vector<Rational>> rows;
  for (auto& [key, row] : eqs) rows.push_back(std::move(row));
  for (const auto& q : nullspace(std::move(rows), u)) {
    Expr e;
    for (int v = 0; v < u; ++v)
      if (!q[v].is_zero()) e = e + Expr(q[v]) * mu(pairs[v].first) * mu(pairs[v].second);
    out.push_back(e);
  }
  return out;
}

std::vector<std::string> LieAlgebra::dual_coordinate_names() const {
  std::vector<std::string> out;
  for (const auto& l : labels_) out.push_back("mu_" + l);
  return out;
}

// ---------------------------------------------------------------------------
// structure constants

std::optional<std::vector<Rational>> coordinates_in_span(std::span<const RationalMatrix> basis,
                                                         const RationalMatrix& m) {
  const int d = static_cast<int>(basis.size());
  std::vector<std::vector<Rational>> rows;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      std::vector<Rational> r(static_cast<std::size_t>(d + 1));
      bool any = !m(i, j).is_zero();
      for (int k = 0; k < d; ++k) {
        r[k] = basis[k](i, j);
        any = any || !r[k].is_zero();
      }
      r[d] = m(i, j);
      if (any) rows.push_back(std::move(r));
    }
  std::vector<int> pivots = rref(rows, d + 1);
  if (!pivots.empty() && pivots.back() == d) return std::nullopt;
  if (static_cast<int>(pivots.size()) != d) throw LieError("basis matrices are linearly dependent");
  std::vector<Rational> out(static_cast<std::size_t>(d));
  for (std::size_t r = 0; r < pivots.size(); ++r) out[pivots[r]] = rows[r][d];
  return out;
}

LieAlgebra structure_constants_from_matrices(std::span<const RationalMatrix> basis,
                                             std::vector<std::string> labels) {
  const int d = static_cast<int>(basis.size());
  LieAlgebra alg(d, std::move(labels));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      auto coords = coordinates_in_span(basis, commutator(basis[i], basis[j]));
      if (!coords)
        throw LieError("commutator [" + alg.labels()[i] + ", " + alg.labels()[j] + "] leaves the span of the basis");
      for (int k = 0; k < d; ++k) alg.set_bracket(i, j, k, (*coords)[k]);
    }
  return alg;
}

std::string bracket_table_csv(const LieAlgebra& algebra) {
  std::ostringstream os;
  os << "i,j";
  for (const auto& l : algebra.labels()) os << ',' << l;
  os << '\n';
  for (int i = 0; i < algebra.dim(); ++i)
    for (int j = i + 1; j < algebra.dim(); ++j) {
      os << algebra.labels()[i] << ',' << algebra.labels()[j];
      for (int k = 0; k < algebra.dim(); ++k) os << ',' << algebra.c(i, j, k).str();
      os << '\n';
    }
  return os.str();
}

Expr lie_poisson_expr(const LieAlgebra& algebra, const Expr& f, const Expr& g,
                      std::span<const std::string> names) {
  std::vector<std::string> defaults;
  if (names.empty()) {
    defaults = algebra.dual_coordinate_names();
    names = defaults;
  }
  if (static_cast<int>(names.size()) != algebra.dim()) throw LieError("lie_poisson: wrong number of coordinates");
  const int n = algebra.dim();
  std::vector<Expr> df(static_cast<std::size_t>(n)), dg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    df[i] = diff(f, names[i]);
    dg[i] = diff(g, names[i]);
  }
  Expr out;
  for (int i = 0; i < n; ++i) {
    if (df[i].is_zero()) continue;
    for (int j = 0; j < n; ++j) {
      if (dg[j].is_zero()) continue;
      Expr lin;
      for (int k = 0; k < n; ++k)
        if (!algebra.c(i, j, k).is_zero()) lin = lin + rational_expr(algebra.c(i, j, k)) * Expr::variable(names[k]);
      if (!lin.is_zero()) out = out - lin * df[i] * dg[j];
    }
  }
  return out;
}

double lie_poisson(const LieAlgebra& algebra, const Expr& f, const Expr& g, const Eigen::VectorXd& mu) {
  std::vector<std::string> names = algebra.dual_coordinate_names();
  if (mu.size() != algebra.dim()) throw LieError("lie_poisson: dimension mismatch");
  Environment env;
  for (int i = 0; i < algebra.dim(); ++i) env[names[i]] = mu(i);
  const int n = algebra.dim();
  Eigen::VectorXd df(n), dg(n);
  for (int i = 0; i < n; ++i) {
    df(i) = eval(diff(f, names[i]), env);
    dg(i) = eval(diff(g, names[i]), env);
  }
  // pairs i < j so that {F,F} vanishes exactly
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double cmu = 0.0;
      for (int k = 0; k < n; ++k)
        if (!algebra.c(i, j, k).is_zero()) cmu += algebra.c(i, j, k).to_double() * mu(k);
      if (cmu != 0.0) s -= cmu * (df(i) * dg(j) - df(j) * dg(i));
    }
  return s;
}

// ---------------------------------------------------------------------------
// Expr matrices

std::vector<Expr> multiply(std::span<const Expr> a, std::span<const Expr> b, int m) {
  std::vector<Expr> out(static_cast<std::size_t>(m * m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Expr s;
      for (int k = 0; k < m; ++k) s = s + a[i * m + k] * b[k * m + j];
      out[i * m + j] = s;
    }
  return out;
}

std::vector<Expr> exp_generator(const RationalMatrix& e, const Expr& t) {
  const int m = e.rows();
  RationalMatrix id(m, m);
  for (int i = 0; i < m; ++i) id(i, i) = Rational(1);
  RationalMatrix e2 = e * e;
  std::vector<Expr> out(static_cast<std::size_t>(m * m));
  if ((e2 * e + e).is_zero() && !e.is_zero()) {
    // exp(tE) = I + sin(t) E + (1 - cos(t)) E^2
    Expr s = sin(t);
    Expr c = Expr(1) - cos(t);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        out[i * m + j] = rational_expr(id(i, j)) + rational_expr(e(i, j)) * s + rational_expr(e2(i, j)) * c;
    return out;
  }
  RationalMatrix power = id;
  Expr tk(1);
  Rational fact(1);
  for (int k = 0; k <= m; ++k) {
    if (power.is_zero()) return out;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (!power(i, j).is_zero()) out[i * m + j] = out[i * m + j] + rational_expr(power(i, j) / fact) * tk;
    power = power * e;
    tk = tk * t;
    fact *= Rational(k + 1);
  }
  if (!power.is_zero()) throw LieError("exp_generator: generator is neither nilpotent nor a rotation generator");
  return out;
}

// ---------------------------------------------------------------------------
// MatrixGroup

MatrixGroup::MatrixGroup(std::string name, int matrix_size, std::vector<std::string> params,
                         std::vector<Expr> chart, std::vector<RationalMatrix> basis,
                         std::vector<std::string> labels, InverseChart inverse_chart)
    : name_(std::move(name)),
      m_(matrix_size),
      params_(std::move(params)),
      chart_(std::move(chart)),
      basis_(std::move(basis)),
      labels_(std::move(labels)),
      inverse_chart_(std::move(inverse_chart)),
      periods_(params_.size(), 0.0),
      period_lower_(params_.size(), 0.0) {
  const int d = dim();
  if (static_cast<int>(chart_.size()) != m_ * m_) throw LieError(name_ + ": chart must have m*m entries");
  if (static_cast<int>(basis_.size()) != d) throw LieError(name_ + ": basis size must equal parameter count");
  for (const auto& b : basis_)
    if (b.rows() != m_ || b.cols() != m_) throw LieError(name_ + ": basis matrix has wrong shape");
  algebra_ = structure_constants_from_matrices(basis_, labels_);
  labels_ = algebra_.labels();

  for (const auto& e : chart_) {
    chart_tape_.emplace_back(e, params_);
  }
  for (const auto& p : params_) {
    std::vector<CompiledExpr> tapes;
    for (const auto& e : chart_) tapes.emplace_back(diff(e, p), params_);
    jacobian_tape_.push_back(std::move(tapes));
  }

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd at_zero = matrix(zero);
  if ((at_zero - Eigen::MatrixXd::Identity(m_, m_)).cwiseAbs().maxCoeff() > 1e-14)
    throw LieError(name_ + ": chart(0) is not the identity");

  basis_flat_.resize(m_ * m_, d);
  for (int k = 0; k < d; ++k) {
    Eigen::MatrixXd b = basis_[k].to_double();
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) basis_flat_(i * m_ + j, k) = b(i, j);
  }
  basis_pinv_ = (basis_flat_.transpose() * basis_flat_).inverse() * basis_flat_.transpose();
}

Eigen::VectorXd MatrixGroup::wrap(Eigen::VectorXd p) const {
  for (int i = 0; i < dim(); ++i) {
    double per = periods_[i];
    if (per <= 0.0) continue;
    double lo = period_lower_[i];
    double r = std::fmod(p(i) - lo, per);
    if (r < 0.0) r += per;
    if (r >= per) r -= per;
    p(i) = lo + r;
  }
  return p;
}

Eigen::VectorXd MatrixGroup::newton_inverse(const Eigen::MatrixXd& m) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim());
  for (int it = 0; it < 60; ++it) {
    Eigen::MatrixXd r = m - matrix(p);
    if (r.cwiseAbs().maxCoeff() < 1e-15) break;
    p += tangent_to_params<double>(p, r);
  }
  if ((m - matrix(p)).cwiseAbs().maxCoeff() > 1e-9) throw LieError(name_ + ": matrix is outside the chart image");
  return p;
}

Eigen::VectorXd MatrixGroup::params_of(const Eigen::MatrixXd& m, bool wrap_params) const {
  if (m.rows() != m_ || m.cols() != m_) throw LieError(name_ + ": matrix has wrong shape");
  Eigen::VectorXd p = inverse_chart_ ? inverse_chart_(m) : newton_inverse(m);
  if (inverse_chart_) {
    // one refinement step cleans up rounding of the closed form
    Eigen::MatrixXd r = m - matrix(p);
    if (r.cwiseAbs().maxCoeff() > 1e-8) throw LieError(name_ + ": matrix is outside the chart image");
    p += tangent_to_params<double>(p, r);
  }
  return wrap_params ? wrap(p) : p;
}

VectorX<Jet> MatrixGroup::params_of(const MatrixX<Jet>& m) const {
  Eigen::VectorXd p0 = params_of(values_of(m));
  Eigen::MatrixXd m0 = matrix(p0);
  VectorX<Jet> pj = p0.cast<Jet>();
  MatrixX<Jet> r = m - m0.cast<Jet>();
  VectorX<Jet> corr = tangent_to_params<Jet>(pj, r);
  VectorX<Jet> out(dim());
  for (int i = 0; i < dim(); ++i) out(i) = Jet(p0(i) + corr(i).value(), corr(i).derivatives());
  return out;
}

// ---------------------------------------------------------------------------
// group operations

Eigen::VectorXd group_mul(const MatrixGroup& g, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return g.params_of(Eigen::MatrixXd(g.matrix(p) * g.matrix(q)), true);
}

Eigen::VectorXd group_inv(const MatrixGroup& g, const Eigen::VectorXd& p) {
  return g.params_of(Eigen::MatrixXd(g.matrix(p).inverse()), true);
}

Eigen::VectorXd group_exp(const MatrixGroup& g, const Eigen::VectorXd& x) {
  return g.params_of(matrix_exp<double>(g.algebra_matrix<double>(x)), true);
}

Eigen::VectorXd group_log(const MatrixGroup& g, const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd a = m - Eigen::MatrixXd::Identity(n, n);
  double norm = a.norm();
  if (!(norm < 0.9)) throw LieError("group_log: matrix too far from the identity for the log series");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  int k = 1;
  for (; k < 2000; ++k) {
    power = power * a;
    Eigen::MatrixXd term = power / static_cast<double>(k);
    sum += (k % 2 == 1) ? term : Eigen::MatrixXd(-term);
    if (term.norm() < 1e-17) break;
  }
  if (k >= 2000) throw LieError("group_log: series did not converge");
  double residual = 0.0;
  Eigen::VectorXd x = g.expand<double>(sum, &residual);
  if (residual > 1e-10) throw LieError("group_log: logarithm is not in the Lie algebra");
  return x;
}

Eigen::VectorXd adjoint(const MatrixGroup& g, const Eigen::VectorXd& params, const Eigen::VectorXd& x) {
  return adjoint_matrix<double>(g, params) * x;
}

Eigen::VectorXd coadjoint_star(const MatrixGroup& g, const Eigen::VectorXd& params, const Eigen::VectorXd& mu) {
  Eigen::MatrixXd ad = adjoint_matrix<double>(g, params);
  return ad.inverse().transpose() * mu;
}

// ---------------------------------------------------------------------------
// b-Lie group pairs

std::vector<std::string> BLieGroupPair::coordinates() const {
  std::vector<std::string> out = subgroup.params();
  out.push_back(phi);
  return out;
}

std::vector<Expr> BLieGroupPair::trivialized_chart() const {
  return multiply(subgroup.chart(), section, group.matrix_size());
}

bool BLieGroupPair::in_domain(const Eigen::VectorXd& q) const {
  for (std::size_t i = 0; i < subgroup_domain.size(); ++i)
    if (!(q(static_cast<Eigen::Index>(i)) > subgroup_domain[i].first &&
          q(static_cast<Eigen::Index>(i)) < subgroup_domain[i].second))
      return false;
  return true;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Expr var(const std::string& n) { return Expr::variable(n); }

std::vector<Expr> identity_chart(int m) {
  std::vector<Expr> out(static_cast<std::size_t>(m * m));
  for (int i = 0; i < m; ++i) out[i * m + i] = Expr(1);
  return out;
}

BLieGroupPair make_se2() {
  using R = RationalMatrix;
  R j = R::unit(3, 3, 1, 0) - R::unit(3, 3, 0, 1);
  R p1 = R::unit(3, 3, 0, 2);
  R p2 = R::unit(3, 3, 1, 2);

  Expr th = var("theta");
  std::vector<Expr> chart = identity_chart(3);
  chart[0] = cos(th);
  chart[1] = -sin(th);
  chart[3] = sin(th);
  chart[4] = cos(th);
  chart[2] = var("x");
  chart[5] = var("y");
  MatrixGroup g("SE(2)", 3, {"theta", "x", "y"}, chart, {j, p1, p2}, {"J", "P1", "P2"},
                [](const Eigen::MatrixXd& m) {
                  Eigen::VectorXd p(3);
                  p << std::atan2(m(1, 0), m(0, 0)), m(0, 2), m(1, 2);
                  return p;
                });
  g.set_period(0, 2.0 * std::numbers::pi, -std::numbers::pi);

  std::vector<Expr> hchart = identity_chart(3);
  hchart[2] = var("x");
  hchart[5] = var("y");
  MatrixGroup h("T(2)", 3, {"x", "y"}, hchart, {p1, p2}, {"P1", "P2"}, [](const Eigen::MatrixXd& m) {
    Eigen::VectorXd p(2);
    p << m(0, 2), m(1, 2);
    return p;
  });

  BLieGroupPair pair;
  pair.name = "se2";
  pair.group = std::move(g);
  pair.subgroup = std::move(h);
  pair.subgroup_basis = {1, 2};
  pair.transverse_generator = 0;
  pair.phi = "phi";
  pair.section = exp_generator(j, var("phi"));
  pair.phi_range = std::numbers::pi / 2.0;
  pair.phi_sample = 1.0;
  pair.subgroup_box = {{-1.0, 1.0}, {-1.0, 1.0}};
  pair.subgroup_domain = {{-kInf, kInf}, {-kInf, kInf}};
  pair.quotient = "S¹";
  return pair;
}

// 3x3 rotation Rx(r1) Ry(r2) Rz(r3) as Exprs.
std::vector<Expr> rotation_xyz(const Expr& r1, const Expr& r2, const Expr& r3) {
  Expr c1 = cos(r1), s1 = sin(r1), c2 = cos(r2), s2 = sin(r2), c3 = cos(r3), s3 = sin(r3);
  std::vector<Expr> rx{1, 0, 0, 0, c1, -s1, 0, s1, c1};
  std::vector<Expr> ry{c2, 0, s2, 0, 1, 0, -s2, 0, c2};
  std::vector<Expr> rz{c3, -s3, 0, s3, c3, 0, 0, 0, 1};
  return multiply(multiply(rx, ry, 3), rz, 3);
}

Eigen::Vector3d rotation_angles(const Eigen::MatrixXd& m) {
  double r2 = std::atan2(m(0, 2), std::hypot(m(0, 0), m(0, 1)));
  double r1 = std::atan2(-m(1, 2), m(2, 2));
  double r3 = std::atan2(-m(0, 1), m(0, 0));
  return {r1, r2, r3};
}

BLieGroupPair make_galilean() {
  using R = RationalMatrix;
  std::vector<R> basis;
  // (J_i)_{jk} = -eps_{ijk}
  basis.push_back(R::unit(5, 5, 2, 1) - R::unit(5, 5, 1, 2));
  basis.push_back(R::unit(5, 5, 0, 2) - R::unit(5, 5, 2, 0));
  basis.push_back(R::unit(5, 5, 1, 0) - R::unit(5, 5, 0, 1));
  for (int i = 0; i < 3; ++i) basis.push_back(R::unit(5, 5, i, 3));
  for (int i = 0; i < 3; ++i) basis.push_back(R::unit(5, 5, i, 4));
  basis.push_back(R::unit(5, 5, 3, 4));
  std::vector<std::string> labels{"J1", "J2", "J3", "K1", "K2", "K3", "P1", "P2", "P3", "E"};
  std::vector<std::string> params{"r1", "r2", "r3", "v1", "v2", "v3", "a1", "a2", "a3", "s"};

  auto build_chart = [](bool with_s) {
    std::vector<Expr> c = identity_chart(5);
    std::vector<Expr> rot = rotation_xyz(var("r1"), var("r2"), var("r3"));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) c[i * 5 + j] = rot[i * 3 + j];
      c[i * 5 + 3] = var("v" + std::to_string(i + 1));
      c[i * 5 + 4] = var("a" + std::to_string(i + 1));
    }
    if (with_s) c[3 * 5 + 4] = var("s");
    return c;
  };
  auto inverse = [](bool with_s) {
    return [with_s](const Eigen::MatrixXd& m) {
      Eigen::VectorXd p(with_s ? 10 : 9);
      p.head<3>() = rotation_angles(m);
      for (int i = 0; i < 3; ++i) {
        p(3 + i) = m(i, 3);
        p(6 + i) = m(i, 4);
      }
      if (with_s) p(9) = m(3, 4);
      return p;
    };
  };

  MatrixGroup g("Galilean", 5, params, build_chart(true), basis, labels, inverse(true));
  std::vector<std::string> hparams(params.begin(), params.begin() + 9);
  std::vector<R> hbasis(basis.begin(), basis.begin() + 9);
  std::vector<std::string> hlabels(labels.begin(), labels.begin() + 9);
  MatrixGroup h("Galilean{s=0}", 5, hparams, build_chart(false), hbasis, hlabels, inverse(false));

  BLieGroupPair pair;
  pair.name = "galilean";
  pair.group = std::move(g);
  pair.subgroup = std::move(h);
  pair.subgroup_basis = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  pair.transverse_generator = 9;
  pair.phi = "s";
  pair.section = exp_generator(basis[9], var("s"));
  pair.phi_range = kInf;
  pair.phi_sample = 1.0;
  pair.subgroup_box.assign(9, {-1.0, 1.0});
  for (int i = 0; i < 3; ++i) pair.subgroup_box[i] = {-0.6, 0.6};
  pair.subgroup_domain.assign(9, {-kInf, kInf});
  pair.subgroup_domain[1] = {-std::numbers::pi / 2.0, std::numbers::pi / 2.0};
  pair.quotient = "R (time)";
  return pair;
}

BLieGroupPair make_heisenberg(int n) {
  if (n < 1) throw LieError("heisenberg_q(n) requires n >= 1");
  using R = RationalMatrix;
  const int m = n + 2;
  auto a_name = [n](int i) { return n == 1 ? std::string("a") : "a" + std::to_string(i + 1); };
  auto b_name = [n](int i) { return n == 1 ? std::string("b") : "b" + std::to_string(i + 1); };
  auto x_label = [n](int i) { return n == 1 ? std::string("X") : "X" + std::to_string(i + 1); };
  auto y_label = [n](int i) { return n == 1 ? std::string("Y") : "Y" + std::to_string(i + 1); };

  std::vector<std::string> params, labels;
  std::vector<R> basis;
  std::vector<Expr> chart = identity_chart(m);
  for (int i = 0; i < n; ++i) {
    params.push_back(a_name(i));
    labels.push_back(x_label(i));
    basis.push_back(R::unit(m, m, 0, i + 1));
    chart[0 * m + i + 1] = var(a_name(i));
  }
  for (int i = 0; i < n; ++i) {
    params.push_back(b_name(i));
    labels.push_back(y_label(i));
    basis.push_back(R::unit(m, m, i + 1, n + 1));
    chart[(i + 1) * m + n + 1] = var(b_name(i));
  }
  params.push_back("c");
  labels.push_back("Z");
  basis.push_back(R::unit(m, m, 0, n + 1));
  chart[n + 1] = var("c");

  auto inverse = [n, m](std::vector<int> skip_a) {
    return [n, m, skip_a](const Eigen::MatrixXd& mat) {
      std::vector<double> p;
      for (int i = 0; i < n; ++i)
        if (std::find(skip_a.begin(), skip_a.end(), i) == skip_a.end()) p.push_back(mat(0, i + 1));
      for (int i = 0; i < n; ++i) p.push_back(mat(i + 1, m - 1));
      p.push_back(mat(0, m - 1));
      return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
    };
  };

  std::string gname = "Heisenberg_q(" + std::to_string(n) + ")";
  MatrixGroup g(gname, m, params, chart, basis, labels, inverse({}));
  g.set_period(2 * n, 1.0, 0.0);

  std::vector<std::string> hparams(params.begin() + 1, params.end());
  std::vector<R> hbasis(basis.begin() + 1, basis.end());
  std::vector<std::string> hlabels(labels.begin() + 1, labels.end());
  std::vector<Expr> hchart = chart;
  hchart[1] = Expr();
  MatrixGroup h(gname + "{" + params[0] + "=0}", m, hparams, hchart, hbasis, hlabels, inverse({0}));
  h.set_period(2 * n - 1, 1.0, 0.0);

  BLieGroupPair pair;
  pair.name = n == 1 ? "heisenberg_q(1)" : "heisenberg_q(" + std::to_string(n) + ")";
  pair.group = std::move(g);
  pair.subgroup = std::move(h);
  for (int i = 1; i < 2 * n + 1; ++i) pair.subgroup_basis.push_back(i);
  pair.transverse_generator = 0;
  pair.phi = params[0];
  pair.section = exp_generator(basis[0], var(params[0]));
  pair.phi_range = kInf;
  pair.phi_sample = 1.0;
  pair.subgroup_box.assign(static_cast<std::size_t>(2 * n), {-1.0, 1.0});
  pair.subgroup_box.back() = {0.1, 0.9};
  pair.subgroup_domain.assign(static_cast<std::size_t>(2 * n), {-kInf, kInf});
  pair.quotient = "R";
  return pair;
}

}  // namespace

BLieGroupPair builtin(std::string_view name) {
  if (name == "se2") return make_se2();
  if (name == "galilean") return make_galilean();
  if (name == "heisenberg_q") return make_heisenberg(1);
  constexpr std::string_view prefix = "heisenberg_q(";
  if (name.starts_with(prefix) && name.ends_with(")")) {
    std::string_view digits = name.substr(prefix.size(), name.size() - prefix.size() - 1);
    if (!digits.empty() && digits.size() < 4 &&
        std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return make_heisenberg(std::stoi(std::string(digits)));
  }
  throw LieError("unknown builtin group '" + std::string(name) + "'");
}

}  // namespace blie
