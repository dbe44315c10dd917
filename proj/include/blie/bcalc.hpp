#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blie/expr.hpp"
#include "blie/sampling.hpp"

namespace blie {

class BCalcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adapted chart of a b-manifold: coordinates z_1..z_n, one of which is the
/// defining function f of Z = {f = 0}.
class BChart {
 public:
  BChart() = default;
  BChart(std::vector<std::string> coords, int defining, Box box = {});

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coords() const { return coords_; }
  int defining() const { return defining_; }
  const std::string& f() const { return coords_[static_cast<std::size_t>(defining_)]; }
  const Box& box() const { return box_; }
  int index_of(std::string_view name) const;

  Environment environment(const Eigen::VectorXd& x) const;

  friend bool operator==(const BChart& a, const BChart& b) {
    return a.coords_ == b.coords_ && a.defining_ == b.defining_;
  }

 private:
  std::vector<std::string> coords_;
  int defining_ = 0;
  Box box_;
};

// E_j F for the b-frame (f d/df, d/dz_j): the defining slot carries a factor f.
Expr frame_derivative(const BChart& chart, const Expr& F, int j);

// True when no denominator, negative power base or log argument of `e`
// vanishes identically on {var = 0}.
bool smooth_across(const Expr& e, std::string_view var);

/// b-vector field a_1 (f d/df) + sum a_i d/dz_i, coefficients in the b-frame.
class BVectorField {
 public:
  BVectorField() = default;
  BVectorField(BChart chart, std::vector<Expr> coefficients);
  static BVectorField frame(const BChart& chart, int i);

  const BChart& chart() const { return chart_; }
  const std::vector<Expr>& coefficients() const { return a_; }
  Expr apply(const Expr& F) const;
  // Components on the coordinate fields d/dz_i.
  std::vector<Expr> coordinate_components() const;

 private:
  BChart chart_;
  std::vector<Expr> a_;
};

using MultiIndex = std::vector<int>;

/// Sign of the permutation sorting `idx`, 0 when it repeats an entry.
int sort_sign(MultiIndex& idx);

/// A b-form of degree k stored in the b-coframe (df/f, dz_i) over strictly
/// increasing multi-indices. Every stored coefficient is a smooth Expr.
class BForm {
 public:
  BForm() = default;
  BForm(BChart chart, int degree);

  static BForm coframe(const BChart& chart, int i);  // df/f for the defining slot, dz_i otherwise
  static BForm function(const BChart& chart, const Expr& g);  // degree 0
  // omega = alpha ^ df/f + beta with smooth coordinate forms alpha, beta.
  static BForm from_alpha_beta(const BForm& alpha, const BForm& beta);
  // A smooth form given by its coordinate components on dz^I.
  static BForm from_coordinate_components(const BChart& chart, int degree,
                                          const std::map<MultiIndex, Expr>& components);

  const BChart& chart() const { return chart_; }
  int degree() const { return degree_; }
  const std::map<MultiIndex, Expr>& components() const { return c_; }

  Expr component(MultiIndex idx) const;
  void set(MultiIndex idx, const Expr& w);
  void add(MultiIndex idx, const Expr& w);

  BForm alpha() const;  // coefficient of ^ df/f, a (k-1)-form
  BForm beta() const;   // the part without df/f

  bool is_zero() const { return c_.empty(); }

  friend BForm operator+(const BForm& a, const BForm& b);
  friend BForm operator-(const BForm& a, const BForm& b);
  friend BForm operator*(const Expr& s, const BForm& a);

 private:
  BChart chart_;
  int degree_ = 0;
  std::map<MultiIndex, Expr> c_;
};

BForm wedge(const BForm& a, const BForm& b);

/// b-exterior derivative d(w e^I) = sum_j E_j(w) e^j ^ e^I.
BForm b_d(const BForm& omega);

/// Interior product with a b-vector field.
BForm interior(const BVectorField& v, const BForm& omega);

/// omega(v_1, ..., v_k) at a point, computed from frame coefficients only.
double pair(const BForm& omega, std::span<const BVectorField> vectors, const Environment& env);
double pair(const BForm& omega, std::span<const Eigen::VectorXd> frame_vectors, const Environment& env);

/// Coefficients of the classical coordinate form at a point off Z.
std::map<MultiIndex, double> coordinate_components(const BForm& omega, const Environment& env,
                                                   double floor = 1e-3);

/// c log|f| + g.
struct BFunction {
  BChart chart;
  Rational c;
  Expr g;

  double operator()(const Environment& env) const;  // undefined on Z; throws there
};

BForm d_bfunction(const BFunction& u);

/// Frame matrix omega(E_i, E_j) of a 2-b-form at a point.
Eigen::MatrixXd frame_matrix(const BForm& omega, const Environment& env);

/// Pfaffian of a real skew-symmetric matrix by skew Gaussian elimination.
double pfaffian(Eigen::MatrixXd a);

struct SampleOptions {
  int count = 128;
  std::uint64_t seed = 42;
  double pfaffian_threshold = 1e-8;
  double closed_tolerance = 1e-10;
};

struct BSymplecticReport {
  int samples = 0;
  double closedness_residual = 0.0;  // max |coefficient of d omega|
  double min_abs_pfaffian = 0.0;
  double max_abs_pfaffian = 0.0;
  bool closed = false;
  bool nondegenerate = false;
  bool verdict = false;

  std::string to_text() const;
};

/// Samples Sobol points of the chart box together with their projections
/// onto Z, and checks closedness and maximal rank in the b-frame.
BSymplecticReport is_b_symplectic(const BForm& omega, const SampleOptions& options = {});

/// 2n-dimensional chart (x1, y1, ..., xn, yn) with defining coordinate y1.
BChart bdarboux_chart(int n);
/// dx1 ^ dy1/y1 + sum_{i>=2} dx_i ^ dy_i.
BForm bdarboux_model(int n);

/// Bivector sum_{i<j} Pi^{ij} d_i ^ d_j with coordinate-frame coefficients.
class PoissonBivector {
 public:
  PoissonBivector() = default;
  explicit PoissonBivector(std::vector<std::string> coords);

  const std::vector<std::string>& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()); }

  Expr coefficient(int i, int j) const;  // antisymmetric
  void set(int i, int j, const Expr& value);
  Expr coefficient(std::string_view a, std::string_view b) const;

  // {F, G} = Pi(dF, dG).
  Expr bracket_expr(const Expr& F, const Expr& G) const;
  double bracket(const Expr& F, const Expr& G, const Environment& env) const;
  // {{F,G},K} + {{G,K},F} + {{K,F},G}.
  double jacobiator(const Expr& F, const Expr& G, const Expr& K, const Environment& env) const;
  // X_H^i = sum_j Pi^{ij} dH/dz_j, so that X_H(F) = {F, H}.
  std::vector<Expr> hamiltonian_field(const Expr& H) const;

  std::string to_csv() const;  // rows "a,b,Pi^{ab}" for the nonzero i<j entries

 private:
  std::vector<std::string> coords_;
  std::map<std::pair<int, int>, Expr> c_;
};

/// Inverts a b-symplectic form symbolically. The frame matrix of Pi is
/// Omega^{-T}; expanding f d/df into coordinates multiplies by f.
PoissonBivector invert_to_poisson(const BForm& omega);

/// Bracket of the classical symplectic form omega|_{M \ Z} at a point with
/// |f| >= floor, by numeric inversion in the coordinate frame.
double classical_bracket(const BForm& omega, const Expr& F, const Expr& G, const Environment& env,
                         double floor = 1e-3);

/// Pulls back a form on `target` along the map target_k = sign_k * source_{perm_k}.
/// The defining coordinate must map to the defining coordinate.
BForm pullback_signed(const BForm& omega, const BChart& source, std::span<const int> perm,
                      std::span<const int> signs);

}  // namespace blie
