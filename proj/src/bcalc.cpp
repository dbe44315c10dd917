#include "blie/bcalc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace blie {

// ---------------------------------------------------------------------------
// charts and vector fields

BChart::BChart(std::vector<std::string> coords, int defining, Box box)
    : coords_(std::move(coords)), defining_(defining), box_(std::move(box)) {
  if (coords_.empty()) throw BCalcError("chart needs at least one coordinate");
  if (defining_ < 0 || defining_ >= dim()) throw BCalcError("defining coordinate index out of range");
  std::set<std::string> seen(coords_.begin(), coords_.end());
  if (seen.size() != coords_.size()) throw BCalcError("duplicate coordinate names");
  if (box_.empty()) box_.assign(coords_.size(), {-1.0, 1.0});
  if (box_.size() != coords_.size()) throw BCalcError("domain box has the wrong dimension");
  for (const auto& [lo, hi] : box_)
    if (!(lo < hi)) throw BCalcError("domain box must be open and nonempty");
}

int BChart::index_of(std::string_view name) const {
  for (int i = 0; i < dim(); ++i)
    if (coords_[i] == name) return i;
  throw BCalcError("unknown coordinate '" + std::string(name) + "'");
}

Environment BChart::environment(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw BCalcError("point has the wrong dimension");
  Environment env;
  for (int i = 0; i < dim(); ++i) env[coords_[i]] = x(i);
  return env;
}

Expr frame_derivative(const BChart& chart, const Expr& F, int j) {
  Expr d = diff(F, chart.coords()[static_cast<std::size_t>(j)]);
  if (j == chart.defining()) return Expr::variable(chart.f()) * d;
  return d;
}

bool smooth_across(const Expr& e, std::string_view var) {
  auto vanishes_on_z = [&](const Expr& x) {
    Expr at_zero = substitute(x, {{std::string(var), Expr()}});
    return at_zero.is_zero();
  };
  switch (e.kind()) {
    case ExprKind::variable:
    case ExprKind::constant: return true;
    case ExprKind::div:
      if (vanishes_on_z(e.rhs())) return false;
      return smooth_across(e.lhs(), var) && smooth_across(e.rhs(), var);
    case ExprKind::log:
      if (vanishes_on_z(e.lhs())) return false;
      return smooth_across(e.lhs(), var);
    case ExprKind::pow:
      if (e.exponent() < 0 && vanishes_on_z(e.lhs())) return false;
      return smooth_across(e.lhs(), var);
    case ExprKind::add:
    case ExprKind::sub:
    case ExprKind::mul: return smooth_across(e.lhs(), var) && smooth_across(e.rhs(), var);
    default: return smooth_across(e.lhs(), var);
  }
}

namespace {

void check_coefficient(const BChart& chart, const Expr& w) {
  for (const auto& v : free_variables(w))
    if (std::find(chart.coords().begin(), chart.coords().end(), v) == chart.coords().end())
      throw BCalcError("coefficient uses '" + v + "', which is not a chart coordinate");
  if (!smooth_across(w, chart.f()))
    throw BCalcError("coefficient " + to_string(w) + " is singular on {" + chart.f() + " = 0}");
}

}  // namespace

BVectorField::BVectorField(BChart chart, std::vector<Expr> coefficients)
    : chart_(std::move(chart)), a_(std::move(coefficients)) {
  if (static_cast<int>(a_.size()) != chart_.dim()) throw BCalcError("vector field has the wrong arity");
  for (const auto& w : a_) check_coefficient(chart_, w);
}

BVectorField BVectorField::frame(const BChart& chart, int i) {
  std::vector<Expr> a(static_cast<std::size_t>(chart.dim()));
  a[static_cast<std::size_t>(i)] = Expr(1);
  return BVectorField(chart, std::move(a));
}

Expr BVectorField::apply(const Expr& F) const {
  Expr out;
  for (int i = 0; i < chart_.dim(); ++i)
    if (!a_[i].is_zero()) out = out + a_[i] * frame_derivative(chart_, F, i);
  return out;
}

std::vector<Expr> BVectorField::coordinate_components() const {
  std::vector<Expr> out = a_;
  out[static_cast<std::size_t>(chart_.defining())] =
      Expr::variable(chart_.f()) * out[static_cast<std::size_t>(chart_.defining())];
  return out;
}

// ---------------------------------------------------------------------------
// forms

int sort_sign(MultiIndex& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
      if (idx[j - 1] == idx[j]) return 0;
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  return sign;
}

BForm::BForm(BChart chart, int degree) : chart_(std::move(chart)), degree_(degree) {
  if (degree < 0 || degree > chart_.dim()) throw BCalcError("form degree out of range");
}

BForm BForm::coframe(const BChart& chart, int i) {
  BForm out(chart, 1);
  out.set({i}, Expr(1));
  return out;
}

BForm BForm::function(const BChart& chart, const Expr& g) {
  BForm out(chart, 0);
  out.set({}, g);
  return out;
}

BForm BForm::from_alpha_beta(const BForm& alpha, const BForm& beta) {
  if (!(alpha.chart() == beta.chart())) throw BCalcError("alpha and beta live on different charts");
  if (alpha.degree() + 1 != beta.degree()) throw BCalcError("deg alpha must be deg beta - 1");
  for (const auto& [idx, w] : beta.components())
    if (std::find(idx.begin(), idx.end(), beta.chart().defining()) != idx.end())
      throw BCalcError("beta must be given without df/f");
  return wedge(alpha, coframe(alpha.chart(), alpha.chart().defining())) + beta;
}

BForm BForm::from_coordinate_components(const BChart& chart, int degree,
                                        const std::map<MultiIndex, Expr>& components) {
  BForm out(chart, degree);
  for (const auto& [idx, w] : components) {
    MultiIndex sorted = idx;
    bool has_f = std::find(idx.begin(), idx.end(), chart.defining()) != idx.end();
    out.add(sorted, has_f ? Expr::variable(chart.f()) * w : w);
  }
  return out;
}

Expr BForm::component(MultiIndex idx) const {
  int s = sort_sign(idx);
  if (s == 0) return Expr();
  auto it = c_.find(idx);
  if (it == c_.end()) return Expr();
  return s > 0 ? it->second : -it->second;
}

void BForm::set(MultiIndex idx, const Expr& w) {
  if (static_cast<int>(idx.size()) != degree_) throw BCalcError("multi-index has the wrong length");
  for (int i : idx)
    if (i < 0 || i >= chart_.dim()) throw BCalcError("multi-index out of range");
  int s = sort_sign(idx);
  if (s == 0) {
    if (!w.is_zero()) throw BCalcError("repeated index in a nonzero component");
    return;
  }
  check_coefficient(chart_, w);
  Expr v = s > 0 ? w : -w;
  if (v.is_zero())
    c_.erase(idx);
  else
    c_[idx] = v;
}

void BForm::add(MultiIndex idx, const Expr& w) {
  if (w.is_zero()) return;
  MultiIndex sorted = idx;
  int s = sort_sign(sorted);
  if (s == 0) return;
  Expr cur = component(sorted);
  set(sorted, cur + (s > 0 ? w : -w));
}

BForm BForm::alpha() const {
  if (degree_ == 0) return BForm(chart_, 0);
  BForm out(chart_, degree_ - 1);
  const int d = chart_.defining();
  for (const auto& [idx, w] : c_) {
    auto it = std::find(idx.begin(), idx.end(), d);
    if (it == idx.end()) continue;
    auto pos = static_cast<int>(it - idx.begin());
    MultiIndex rest = idx;
    rest.erase(rest.begin() + pos);
    // e^I = (-1)^(k-1-pos) e^{I \ d} ^ e^d
    bool odd = ((degree_ - 1 - pos) % 2) != 0;
    out.set(rest, odd ? -w : w);
  }
  return out;
}

BForm BForm::beta() const {
  BForm out(chart_, degree_);
  const int d = chart_.defining();
  for (const auto& [idx, w] : c_)
    if (std::find(idx.begin(), idx.end(), d) == idx.end()) out.set(idx, w);
  return out;
}

BForm operator+(const BForm& a, const BForm& b) {
  if (!(a.chart_ == b.chart_) || a.degree_ != b.degree_) throw BCalcError("form sum: mismatched forms");
  BForm out = a;
  for (const auto& [idx, w] : b.c_) out.add(idx, w);
  return out;
}

BForm operator-(const BForm& a, const BForm& b) { return a + Expr(-1) * b; }

BForm operator*(const Expr& s, const BForm& a) {
  BForm out(a.chart_, a.degree_);
  if (s.is_zero()) return out;
  for (const auto& [idx, w] : a.c_) out.set(idx, s * w);
  return out;
}

BForm wedge(const BForm& a, const BForm& b) {
  if (!(a.chart() == b.chart())) throw BCalcError("wedge: forms on different charts");
  if (a.degree() + b.degree() > a.chart().dim()) return BForm(a.chart(), a.chart().dim());
  BForm out(a.chart(), a.degree() + b.degree());
  for (const auto& [i, wa] : a.components())
    for (const auto& [j, wb] : b.components()) {
      MultiIndex idx = i;
      idx.insert(idx.end(), j.begin(), j.end());
      int s = sort_sign(idx);
      if (s == 0) continue;
      out.add(idx, s > 0 ? wa * wb : -(wa * wb));
    }
  return out;
}

BForm b_d(const BForm& omega) {
  const BChart& chart = omega.chart();
  if (omega.degree() == chart.dim()) return BForm(chart, chart.dim());
  BForm out(chart, omega.degree() + 1);
  for (const auto& [idx, w] : omega.components())
    for (int j = 0; j < chart.dim(); ++j) {
      if (std::find(idx.begin(), idx.end(), j) != idx.end()) continue;
      Expr ej = frame_derivative(chart, w, j);
      if (ej.is_zero()) continue;
      MultiIndex full{j};
      full.insert(full.end(), idx.begin(), idx.end());
      out.add(full, ej);
    }
  return out;
}

BForm interior(const BVectorField& v, const BForm& omega) {
  if (omega.degree() == 0) throw BCalcError("interior product of a 0-form");
  BForm out(omega.chart(), omega.degree() - 1);
  for (const auto& [idx, w] : omega.components())
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const Expr& a = v.coefficients()[static_cast<std::size_t>(idx[p])];
      if (a.is_zero()) continue;
      MultiIndex rest = idx;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(p));
      out.add(rest, (p % 2 == 0) ? a * w : -(a * w));
    }
  return out;
}

namespace {

double minor_of(const MultiIndex& idx, std::span<const Eigen::VectorXd> vectors) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) m(r, c) = vectors[static_cast<std::size_t>(c)](idx[r]);
  return k == 0 ? 1.0 : m.determinant();
}

}  // namespace

double pair(const BForm& omega, std::span<const Eigen::VectorXd> frame_vectors, const Environment& env) {
  if (static_cast<int>(frame_vectors.size()) != omega.degree()) throw BCalcError("pair: arity mismatch");
  for (const auto& v : frame_vectors)
    if (v.size() != omega.chart().dim()) throw BCalcError("pair: vector has the wrong dimension");
  double s = 0.0;
  for (const auto& [idx, w] : omega.components()) s += eval(w, env) * minor_of(idx, frame_vectors);
  return s;
}

double pair(const BForm& omega, std::span<const BVectorField> vectors, const Environment& env) {
  std::vector<Eigen::VectorXd> frame;
  for (const auto& v : vectors) {
    if (!(v.chart() == omega.chart())) throw BCalcError("pair: vector field on a different chart");
    Eigen::VectorXd x(v.chart().dim());
    for (int i = 0; i < v.chart().dim(); ++i) x(i) = eval(v.coefficients()[i], env);
    frame.push_back(std::move(x));
  }
  return pair(omega, std::span<const Eigen::VectorXd>(frame), env);
}

std::map<MultiIndex, double> coordinate_components(const BForm& omega, const Environment& env, double floor) {
  const BChart& chart = omega.chart();
  double f = env.at(chart.f());
  if (std::abs(f) < floor) throw BCalcError("coordinate frame requested too close to Z");
  std::map<MultiIndex, double> out;
  for (const auto& [idx, w] : omega.components()) {
    double v = eval(w, env);
    if (std::find(idx.begin(), idx.end(), chart.defining()) != idx.end()) v /= f;
    out[idx] = v;
  }
  return out;
}

double BFunction::operator()(const Environment& env) const {
  double f = env.at(chart.f());
  if (f == 0.0) throw BCalcError("b-function evaluated on Z");
  return c.to_double() * std::log(std::abs(f)) + eval(g, env);
}

BForm d_bfunction(const BFunction& u) {
  BForm out(u.chart, 1);
  out.add({u.chart.defining()}, Expr(u.c));
  for (int j = 0; j < u.chart.dim(); ++j) out.add({j}, frame_derivative(u.chart, u.g, j));
  return out;
}

// ---------------------------------------------------------------------------
// b-symplectic verdicts

Eigen::MatrixXd frame_matrix(const BForm& omega, const Environment& env) {
  if (omega.degree() != 2) throw BCalcError("frame matrix of a form that is not a 2-form");
  const int n = omega.chart().dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [idx, w] : omega.components()) {
    double v = eval(w, env);
    m(idx[0], idx[1]) = v;
    m(idx[1], idx[0]) = -v;
  }
  return m;
}

double pfaffian(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw BCalcError("pfaffian of a non-square matrix");
  if (n % 2 == 1) return 0.0;
  double pf = 1.0;
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index kp = k + 1;
    double best = std::abs(a(k + 1, k));
    for (Eigen::Index i = k + 2; i < n; ++i)
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        kp = i;
      }
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == 0.0) return 0.0;
    pf *= a(k, k + 1);
    if (k + 2 < n) {
      Eigen::VectorXd tau = a.row(k).segment(k + 2, n - k - 2).transpose() / a(k, k + 1);
      Eigen::VectorXd col = a.col(k + 1).segment(k + 2, n - k - 2);
      a.block(k + 2, k + 2, n - k - 2, n - k - 2) += tau * col.transpose() - col * tau.transpose();
    }
  }
  return pf;
}

std::string BSymplecticReport::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "samples: " << samples << '\n';
  os << "closedness_residual: " << closedness_residual << '\n';
  os << "min_abs_pfaffian: " << min_abs_pfaffian << '\n';
  os << "max_abs_pfaffian: " << max_abs_pfaffian << '\n';
  os << "closed: " << (closed ? "true" : "false") << '\n';
  os << "nondegenerate: " << (nondegenerate ? "true" : "false") << '\n';
  os << "verdict: " << (verdict ? "true" : "false") << '\n';
  return os.str();
}

BSymplecticReport is_b_symplectic(const BForm& omega, const SampleOptions& options) {
  const BChart& chart = omega.chart();
  if (chart.dim() % 2 != 0) throw BCalcError("b-symplectic forms need an even-dimensional chart");
  if (omega.degree() != 2) throw BCalcError("b-symplectic forms have degree 2");
  BForm domega = b_d(omega);
  std::vector<CompiledExpr> dtapes;
  for (const auto& [idx, w] : domega.components()) dtapes.emplace_back(w, chart.coords());

  std::vector<Eigen::VectorXd> points = sobol_points(chart.box(), options.count, options.seed);
  const auto n_off = points.size();
  for (std::size_t i = 0; i < n_off; ++i) {
    Eigen::VectorXd z = points[i];
    z(chart.defining()) = 0.0;
    points.push_back(std::move(z));
  }

  BSymplecticReport r;
  r.samples = static_cast<int>(points.size());
  r.min_abs_pfaffian = std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    for (const auto& t : dtapes) r.closedness_residual = std::max(r.closedness_residual, std::abs(t(x)));
    double pf = std::abs(pfaffian(frame_matrix(omega, chart.environment(x))));
    r.min_abs_pfaffian = std::min(r.min_abs_pfaffian, pf);
    r.max_abs_pfaffian = std::max(r.max_abs_pfaffian, pf);
  }
  if (points.empty()) r.min_abs_pfaffian = 0.0;
  r.closed = r.closedness_residual <= options.closed_tolerance;
  r.nondegenerate = r.min_abs_pfaffian >= options.pfaffian_threshold;
  r.verdict = r.closed && r.nondegenerate;
  return r;
}

BChart bdarboux_chart(int n) {
  if (n < 1) throw BCalcError("b-Darboux chart needs n >= 1");
  std::vector<std::string> coords;
  for (int i = 1; i <= n; ++i) {
    coords.push_back("x" + std::to_string(i));
    coords.push_back("y" + std::to_string(i));
  }
  Box box(coords.size(), {-1.0, 1.0});
  box[1] = {-2.0, 2.0};
  return BChart(coords, 1, box);
}

BForm bdarboux_model(int n) {
  BChart chart = bdarboux_chart(n);
  BForm out(chart, 2);
  for (int i = 0; i < n; ++i) out.set({2 * i, 2 * i + 1}, Expr(1));
  return out;
}

// ---------------------------------------------------------------------------
// Poisson bivectors

PoissonBivector::PoissonBivector(std::vector<std::string> coords) : coords_(std::move(coords)) {}

Expr PoissonBivector::coefficient(int i, int j) const {
  if (i == j) return Expr();
  auto it = c_.find({std::min(i, j), std::max(i, j)});
  if (it == c_.end()) return Expr();
  return i < j ? it->second : -it->second;
}

Expr PoissonBivector::coefficient(std::string_view a, std::string_view b) const {
  auto idx = [&](std::string_view n) {
    for (int i = 0; i < dim(); ++i)
      if (coords_[i] == n) return i;
    throw BCalcError("unknown coordinate '" + std::string(n) + "'");
  };
  return coefficient(idx(a), idx(b));
}

void PoissonBivector::set(int i, int j, const Expr& value) {
  if (i == j) {
    if (!value.is_zero()) throw BCalcError("bivector diagonal must vanish");
    return;
  }
  std::pair<int, int> key{std::min(i, j), std::max(i, j)};
  Expr v = i < j ? value : -value;
  if (v.is_zero())
    c_.erase(key);
  else
    c_[key] = v;
}

Expr PoissonBivector::bracket_expr(const Expr& F, const Expr& G) const {
  std::vector<Expr> dF, dG;
  for (const auto& c : coords_) {
    dF.push_back(diff(F, c));
    dG.push_back(diff(G, c));
  }
  Expr out;
  for (const auto& [key, pij] : c_) {
    auto [i, j] = key;
    Expr t = dF[i] * dG[j] - dF[j] * dG[i];
    if (!t.is_zero()) out = out + pij * t;
  }
  return out;
}

double PoissonBivector::bracket(const Expr& F, const Expr& G, const Environment& env) const {
  double s = 0.0;
  for (const auto& [key, pij] : c_) {
    auto [i, j] = key;
    double fi = eval(diff(F, coords_[i]), env), fj = eval(diff(F, coords_[j]), env);
    double gi = eval(diff(G, coords_[i]), env), gj = eval(diff(G, coords_[j]), env);
    double t = fi * gj - fj * gi;
    if (t != 0.0) s += eval(pij, env) * t;
  }
  return s;
}

double PoissonBivector::jacobiator(const Expr& F, const Expr& G, const Expr& K, const Environment& env) const {
  return bracket(bracket_expr(F, G), K, env) + bracket(bracket_expr(G, K), F, env) +
         bracket(bracket_expr(K, F), G, env);
}

std::vector<Expr> PoissonBivector::hamiltonian_field(const Expr& H) const {
  std::vector<Expr> dH;
  for (const auto& c : coords_) dH.push_back(diff(H, c));
  std::vector<Expr> out(coords_.size());
  for (const auto& [key, pij] : c_) {
    auto [i, j] = key;
    if (!dH[j].is_zero()) out[i] = out[i] + pij * dH[j];
    if (!dH[i].is_zero()) out[j] = out[j] - pij * dH[i];
  }
  return out;
}

std::string PoissonBivector::to_csv() const {
  std::ostringstream os;
  os << "i,j,bracket\n";
  for (const auto& [key, pij] : c_) os << coords_[key.first] << ',' << coords_[key.second] << ',' << to_string(pij) << '\n';
  return os.str();
}

PoissonBivector invert_to_poisson(const BForm& omega) {
  const BChart& chart = omega.chart();
  if (omega.degree() != 2) throw BCalcError("invert_to_poisson needs a 2-form");
  const int n = chart.dim();
  if (n % 2 != 0) throw BCalcError("invert_to_poisson needs an even-dimensional chart");

  Environment ref;
  for (int i = 0; i < n; ++i) ref[chart.coords()[i]] = 0.5 * (chart.box()[i].first + chart.box()[i].second) + 0.1234567 * (i + 1) / n;

  // [Omega^T | I] -> [I | Omega^{-T}] by Gauss-Jordan over Exprs.
  std::vector<std::vector<Expr>> a(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(2 * n)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = omega.component({j, i});
    a[i][n + i] = Expr(1);
  }
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    double best = 0.0;
    bool best_const = false;
    for (int i = k; i < n; ++i) {
      const Expr& e = a[i][k];
      if (e.is_zero()) continue;
      double v = 0.0;
      try {
        v = std::abs(eval(e, ref));
      } catch (const ExprError&) {
        continue;
      }
      if (v == 0.0) continue;
      bool c = e.is_constant();
      if (piv < 0 || (c && !best_const) || (c == best_const && v > best)) {
        piv = i;
        best = v;
        best_const = c;
      }
    }
    if (piv < 0) throw BCalcError("frame matrix is singular; the form is not b-symplectic");
    std::swap(a[k], a[piv]);
    Expr p = a[k][k];
    for (int j = 0; j < 2 * n; ++j) a[k][j] = a[k][j] / p;
    for (int i = 0; i < n; ++i) {
      if (i == k || a[i][k].is_zero()) continue;
      Expr f = a[i][k];
      for (int j = 0; j < 2 * n; ++j)
        if (!a[k][j].is_zero()) a[i][j] = a[i][j] - f * a[k][j];
    }
  }

  PoissonBivector out(chart.coords());
  Expr fvar = Expr::variable(chart.f());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Expr v = a[i][n + j];
      if (i == chart.defining() || j == chart.defining()) v = fvar * v;
      out.set(i, j, v);
    }
  return out;
}

double classical_bracket(const BForm& omega, const Expr& F, const Expr& G, const Environment& env, double floor) {
  const BChart& chart = omega.chart();
  const int n = chart.dim();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [idx, v] : coordinate_components(omega, env, floor)) {
    w(idx[0], idx[1]) = v;
    w(idx[1], idx[0]) = -v;
  }
  Eigen::MatrixXd pi = w.transpose().inverse();
  Eigen::VectorXd dF(n), dG(n);
  for (int i = 0; i < n; ++i) {
    dF(i) = eval(diff(F, chart.coords()[i]), env);
    dG(i) = eval(diff(G, chart.coords()[i]), env);
  }
  return dF.dot(pi * dG);
}

BForm pullback_signed(const BForm& omega, const BChart& source, std::span<const int> perm, std::span<const int> signs) {
  const BChart& target = omega.chart();
  const int n = target.dim();
  if (source.dim() != n || static_cast<int>(perm.size()) != n || static_cast<int>(signs.size()) != n)
    throw BCalcError("pullback: dimension mismatch");
  if (perm[target.defining()] != source.defining())
    throw BCalcError("pullback: the defining coordinate must map to the defining coordinate");
  std::map<std::string, Expr, std::less<>> rename;
  for (int k = 0; k < n; ++k) {
    if (signs[k] != 1 && signs[k] != -1) throw BCalcError("pullback: signs must be +-1");
    Expr v = Expr::variable(source.coords()[perm[k]]);
    rename[target.coords()[k]] = signs[k] > 0 ? v : -v;
  }
  BForm out(source, omega.degree());
  for (const auto& [idx, w] : omega.components()) {
    MultiIndex img;
    int s = 1;
    for (int k : idx) {
      img.push_back(perm[k]);
      if (k != target.defining()) s *= signs[k];  // d(-f)/(-f) = df/f
    }
    int ps = sort_sign(img);
    if (ps == 0) throw BCalcError("pullback: perm is not a permutation");
    Expr c = substitute(w, rename);
    out.add(img, s * ps > 0 ? c : -c);
  }
  return out;
}

}  // namespace blie
