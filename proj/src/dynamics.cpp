#include "blie/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace blie {

VectorFieldExpr::VectorFieldExpr(std::vector<std::string> c, std::vector<Expr> comps)
    : coords(std::move(c)), components(std::move(comps)) {
  if (coords.size() != components.size()) throw std::invalid_argument("vector field has the wrong arity");
  for (const auto& e : components) tapes_.emplace_back(e, coords);
}

Eigen::VectorXd VectorFieldExpr::operator()(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(components.size()));
  for (std::size_t i = 0; i < components.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = components[i].is_zero() ? 0.0 : tapes_[i](x);
  return out;
}

VectorFieldExpr hamiltonian_vf(const PoissonBivector& pi, const Expr& hamiltonian) {
  for (const auto& v : free_variables(hamiltonian))
    if (std::find(pi.coords().begin(), pi.coords().end(), v) == pi.coords().end())
      throw BCalcError("Hamiltonian uses '" + v + "', which is not a coordinate");
  return VectorFieldExpr(pi.coords(), pi.hamiltonian_field(hamiltonian));
}

Method parse_method(std::string_view name) {
  if (name == "rk4") return Method::rk4;
  if (name == "midpoint") return Method::midpoint;
  throw std::invalid_argument("unknown integration method '" + std::string(name) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

bool inside(const Box& box, const Eigen::VectorXd& x) {
  for (std::size_t i = 0; i < box.size(); ++i) {
    double v = x(static_cast<Eigen::Index>(i));
    if (!(v >= box[i].first && v <= box[i].second)) return false;
  }
  return true;
}

}  // namespace

Trajectory integrate(const VectorFieldExpr& vf, const Eigen::VectorXd& x0, const FlowOptions& options) {
  if (!(options.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(options.T >= options.dt)) throw std::invalid_argument("T must be at least dt");
  const auto dim = static_cast<Eigen::Index>(vf.coords.size());
  if (x0.size() != dim) throw std::invalid_argument("initial state has the wrong dimension");
  if (!options.box.empty() && !inside(options.box, x0)) throw std::invalid_argument("initial state outside the box");

  const int phi = options.phi_index;
  const bool on_z = phi >= 0 && x0(phi) == 0.0;
  const bool use_log = phi >= 0 && options.log_phi && !on_z;
  const double phi_sign = (phi >= 0 && x0(phi) < 0.0) ? -1.0 : 1.0;

  // State z: x with phi replaced by log|phi| when use_log.
  auto to_x = [&](Eigen::VectorXd z) {
    if (use_log) z(phi) = phi_sign * std::exp(z(phi));
    return z;
  };
  auto rhs = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x = to_x(z);
    Eigen::VectorXd d = vf(x);
    if (on_z) d(phi) = 0.0;
    if (use_log) d(phi) /= x(phi);
    return d;
  };

  CompiledExpr energy(options.hamiltonian, vf.coords);
  std::vector<CompiledExpr> casimirs;
  for (const auto& [name, e] : options.casimirs) casimirs.emplace_back(e, vf.coords);

  Trajectory tr;
  tr.coords = vf.coords;
  for (const auto& [name, e] : options.casimirs) tr.casimir_names.push_back(name);
  auto record = [&](double t, const Eigen::VectorXd& x) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.energy.push_back(energy(x));
    Eigen::VectorXd c(static_cast<Eigen::Index>(casimirs.size()));
    for (std::size_t i = 0; i < casimirs.size(); ++i) c(static_cast<Eigen::Index>(i)) = casimirs[i](x);
    tr.casimir_values.push_back(std::move(c));
  };

  Eigen::VectorXd z = x0;
  if (use_log) z(phi) = std::log(std::abs(x0(phi)));
  record(0.0, x0);
  const auto steps = static_cast<long>(std::llround(options.T / options.dt));
  const double h = options.dt;
  for (long k = 1; k <= steps; ++k) {
    Eigen::VectorXd next;
    if (options.method == Method::rk4) {
      Eigen::VectorXd k1 = rhs(z);
      Eigen::VectorXd k2 = rhs(z + 0.5 * h * k1);
      Eigen::VectorXd k3 = rhs(z + 0.5 * h * k2);
      Eigen::VectorXd k4 = rhs(z + h * k3);
      next = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      Eigen::VectorXd k1 = rhs(z);
      next = z + h * rhs(z + 0.5 * h * k1);
    }
    if (on_z) next(phi) = 0.0;
    const double t = static_cast<double>(k) * h;
    Eigen::VectorXd x = to_x(next);
    if (!x.allFinite() || (!options.box.empty() && !inside(options.box, x))) {
      tr.exited = true;
      tr.exit_time = t;
      break;
    }
    z = std::move(next);
    record(t, x);
  }

  tr.casimir_drift.assign(options.casimirs.size(), 0.0);
  tr.min_abs_phi = phi >= 0 ? std::abs(x0(phi)) : 0.0;
  for (std::size_t s = 0; s < tr.states.size(); ++s) {
    tr.energy_drift = std::max(tr.energy_drift, std::abs(tr.energy[s] - tr.energy[0]));
    for (std::size_t c = 0; c < options.casimirs.size(); ++c) {
      auto i = static_cast<Eigen::Index>(c);
      tr.casimir_drift[c] = std::max(tr.casimir_drift[c], std::abs(tr.casimir_values[s](i) - tr.casimir_values[0](i)));
    }
    if (phi >= 0) tr.min_abs_phi = std::min(tr.min_abs_phi, std::abs(tr.states[s](phi)));
  }
  return tr;
}

std::string Trajectory::to_csv() const {
  std::string out = "t";
  for (const auto& c : coords) out += "," + c;
  out += ",H";
  for (const auto& c : casimir_names) out += "," + c;
  out += "\n";
  for (std::size_t s = 0; s < states.size(); ++s) {
    out += format_double(times[s]);
    for (Eigen::Index i = 0; i < states[s].size(); ++i) out += "," + format_double(states[s](i));
    out += "," + format_double(energy[s]);
    for (Eigen::Index i = 0; i < casimir_values[s].size(); ++i) out += "," + format_double(casimir_values[s](i));
    out += "\n";
  }
  return out;
}

std::vector<std::pair<std::string, Expr>> reduced_casimirs(const TrivializedBundle& bundle) {
  const LieAlgebra& alg = bundle.subgroup().algebra();
  auto names = alg.dual_coordinate_names();
  std::vector<std::pair<std::string, Expr>> out;
  int k = 1;
  for (const auto& c : casimir_candidates(alg, names)) out.emplace_back("C" + std::to_string(k++), c);
  return out;
}

LeafReport leaf_report(const ReducedPoisson& reduced, const Trajectory& trajectory) {
  LeafReport r;
  const std::string& phi_name = reduced.coords[static_cast<std::size_t>(reduced.h_dim)];
  auto it = std::find(trajectory.coords.begin(), trajectory.coords.end(), phi_name);
  if (it == trajectory.coords.end()) throw std::invalid_argument("trajectory has no transverse coordinate");
  const auto phi = static_cast<Eigen::Index>(it - trajectory.coords.begin());
  const double first = trajectory.states.front()(phi);
  r.stays_on_z = first == 0.0;
  for (const auto& x : trajectory.states) {
    double v = x(phi);
    if (r.stays_on_z && v != 0.0) r.stays_on_z = false;
    if ((first > 0.0 && !(v > 0.0)) || (first < 0.0 && !(v < 0.0)) || (first == 0.0 && v != 0.0))
      r.sign_constant = false;
  }
  r.energy_drift = trajectory.energy_drift;
  for (std::size_t c = 0; c < trajectory.casimir_names.size(); ++c)
    r.casimir_drift.emplace_back(trajectory.casimir_names[c], trajectory.casimir_drift[c]);
  return r;
}

std::string LeafReport::to_text() const {
  std::ostringstream os;
  os << "sign_constant: " << (sign_constant ? "true" : "false") << "\n";
  os << "stays_on_z: " << (stays_on_z ? "true" : "false") << "\n";
  os << "energy_drift: " << format_double(energy_drift) << "\n";
  for (const auto& [name, d] : casimir_drift) os << "casimir_drift." << name << ": " << format_double(d) << "\n";
  return os.str();
}

}  // namespace blie
