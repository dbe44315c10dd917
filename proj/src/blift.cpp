#include "blie/blift.hpp"

namespace blie {

namespace {

BChart total_chart(const BChart& base, const std::vector<std::string>& fiber) {
  std::vector<std::string> coords = base.coords();
  coords.insert(coords.end(), fiber.begin(), fiber.end());
  Box box = base.box();
  for (std::size_t i = 0; i < fiber.size(); ++i) box.emplace_back(-1.0, 1.0);
  return BChart(std::move(coords), base.defining(), std::move(box));
}

std::vector<std::string> default_fiber(const BChart& base, std::vector<std::string> names) {
  if (names.empty())
    for (const auto& c : base.coords()) names.push_back("p_" + c);
  if (static_cast<int>(names.size()) != base.dim()) throw BCalcError("fiber needs one coordinate per base coordinate");
  return names;
}

}  // namespace

BCotangentChart::BCotangentChart(BChart base, std::vector<std::string> fiber_names)
    : base_(std::move(base)), total_(total_chart(base_, default_fiber(base_, std::move(fiber_names)))) {}

BForm liouville(const BCotangentChart& c) {
  const int n = c.base_dim();
  BForm out(c.total(), 1);
  for (int i = 0; i < n; ++i) out.set({i}, Expr::variable(c.total().coords()[static_cast<std::size_t>(n + i)]));
  return out;
}

BForm canonical_bsymplectic(const BCotangentChart& c) {
  BForm l = liouville(c);
  return BForm(c.total(), 2) - b_d(l);
}

ScalarField ScalarField::from_expr(const Expr& e, std::vector<std::string> coords) {
  auto tape = std::make_shared<CompiledExpr>(e, coords);
  ScalarField s;
  s.value_ = [tape](const Eigen::VectorXd& x) { return (*tape)(x); };
  s.jet_ = [tape](const VectorX<Jet>& x) { return (*tape)(x); };
  return s;
}

namespace {

BChart base_chart(const BLieGroupPair& pair) {
  Box box = pair.subgroup_box;
  box.emplace_back(-pair.phi_sample, pair.phi_sample);
  return BChart(pair.coordinates(), pair.dim() - 1, std::move(box));
}

std::vector<std::string> alpha_names(const BLieGroupPair& pair) {
  std::vector<std::string> out;
  for (const auto& c : pair.coordinates()) out.push_back("alpha_" + c);
  return out;
}

}  // namespace

TrivializedBundle::TrivializedBundle(BLieGroupPair pair, FrameMode mode)
    : pair_(std::move(pair)),
      mode_(mode),
      n_(pair_.dim()),
      cotangent_(base_chart(pair_), alpha_names(pair_)) {
  if (pair_.subgroup.dim() != n_ - 1) throw LieError("subgroup must have codimension one");
}

Eigen::VectorXd TrivializedBundle::sample_base(std::mt19937_64& rng, bool on_z, double phi_floor) const {
  const int m = h_dim();
  Eigen::VectorXd q(n_);
  for (int i = 0; i < m; ++i) {
    const auto& [lo, hi] = pair_.subgroup_box[static_cast<std::size_t>(i)];
    q(i) = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  if (on_z) {
    q(m) = 0.0;
  } else {
    double mag = std::uniform_real_distribution<double>(phi_floor, pair_.phi_sample)(rng);
    q(m) = std::bernoulli_distribution(0.5)(rng) ? mag : -mag;
  }
  return q;
}

Eigen::VectorXd TrivializedBundle::sample_point(std::mt19937_64& rng, bool on_z, double phi_floor) const {
  Eigen::VectorXd x(2 * n_);
  x.head(n_) = sample_base(rng, on_z, phi_floor);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < n_; ++i) x(n_ + i) = u(rng);
  return x;
}

Eigen::VectorXd TrivializedBundle::sample_subgroup(std::mt19937_64& rng, double half_width) const {
  const int m = h_dim();
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Eigen::VectorXd h(m);
  for (int i = 0; i < m; ++i) h(i) = u(rng);
  return h;
}

Eigen::VectorXd TrivializedBundle::sample_acting(std::mt19937_64& rng, const Eigen::VectorXd& q,
                                                 double half_width) const {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd h = sample_subgroup(rng, half_width);
    Eigen::MatrixXd hm = pair_.subgroup.matrix(h);
    Eigen::VectorXd moved = translate_base<double>(hm, q.head(n_));
    if (pair_.in_domain(moved.head(h_dim()))) return h;
  }
  throw LieError("no group element keeps the point inside the chart");
}

Eigen::VectorXd TrivializedBundle::lift(const Eigen::VectorXd& h_params, const Eigen::VectorXd& x) const {
  Eigen::MatrixXd hmat = pair_.subgroup.matrix(h_params);
  return lift<double>(hmat, x);
}

Eigen::VectorXd TrivializedBundle::zeta(const Eigen::VectorXd& q, const Eigen::VectorXd& xi) const {
  return zeta_matrix<double>(q) * xi;
}

Eigen::VectorXd TrivializedBundle::fundamental_field(const Eigen::VectorXd& xi, const Eigen::VectorXd& x) const {
  Jet t = make_jet(0.0, 1, 0, 1.0);
  MatrixX<Jet> gen = pair_.subgroup.algebra_matrix<double>(xi).cast<Jet>();
  MatrixX<Jet> hmat = matrix_exp<Jet>(MatrixX<Jet>(gen * t));
  VectorX<Jet> xj = x.cast<Jet>();
  VectorX<Jet> y = lift<Jet>(hmat, xj);
  Eigen::VectorXd out(2 * n_);
  for (int i = 0; i < 2 * n_; ++i) out(i) = derivative_of(y(i), 0);
  out(phi_index()) = 0.0;
  return out;
}

Eigen::MatrixXd TrivializedBundle::lift_jacobian(const Eigen::VectorXd& h_params, const Eigen::VectorXd& x) const {
  const int d = 2 * n_;
  VectorX<Jet> xj = frame_jets(x, phi_index(), mode_);
  MatrixX<Jet> hmat = pair_.subgroup.matrix(h_params).cast<Jet>();
  VectorX<Jet> y = lift<Jet>(hmat, xj);
  Eigen::MatrixXd out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = derivative_of(y(i), j);
  out.row(phi_index()).setZero();
  out(phi_index(), phi_index()) = 1.0;
  return out;
}

Eigen::MatrixXd TrivializedBundle::canonical_matrix() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2 * n_, 2 * n_);
  for (int i = 0; i < n_; ++i) {
    w(i, n_ + i) = 1.0;
    w(n_ + i, i) = -1.0;
  }
  return w;
}

Eigen::VectorXd TrivializedBundle::frame_gradient(const ScalarField& F, const Eigen::VectorXd& x) const {
  VectorX<Jet> xj = frame_jets(x, phi_index(), mode_);
  Jet v = F(xj);
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) out(j) = derivative_of(v, static_cast<int>(j));
  return out;
}

double TrivializedBundle::bracket(const ScalarField& F, const ScalarField& G, const Eigen::VectorXd& x) const {
  Eigen::VectorXd df = frame_gradient(F, x);
  Eigen::VectorXd dg = frame_gradient(G, x);
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += df(j) * dg(n_ + j) - df(n_ + j) * dg(j);
  return s;
}

}  // namespace blie
