#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blie/bcalc.hpp"
#include "blie/reduction.hpp"

namespace blie {

/// X_H with X_H(F) = {F, H}; components on the coordinate fields.
struct VectorFieldExpr {
  VectorFieldExpr() = default;
  VectorFieldExpr(std::vector<std::string> coords, std::vector<Expr> components);

  std::vector<std::string> coords;
  std::vector<Expr> components;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

 private:
  std::vector<CompiledExpr> tapes_;
};

VectorFieldExpr hamiltonian_vf(const PoissonBivector& pi, const Expr& hamiltonian);

enum class Method { rk4, midpoint };

Method parse_method(std::string_view name);

struct FlowOptions {
  double dt = 1e-3;
  double T = 1.0;
  Method method = Method::rk4;
  Box box;                    // empty: unbounded
  int phi_index = -1;         // transverse coordinate, -1 when none
  bool log_phi = false;       // integrate u = log|phi| when phi(x0) != 0
  Expr hamiltonian;
  std::vector<std::pair<std::string, Expr>> casimirs;
};

struct Trajectory {
  std::vector<std::string> coords;
  std::vector<std::string> casimir_names;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> energy;
  std::vector<Eigen::VectorXd> casimir_values;

  double energy_drift = 0.0;
  std::vector<double> casimir_drift;
  double min_abs_phi = 0.0;
  bool exited = false;
  double exit_time = 0.0;

  std::string to_csv() const;
};

/// Fixed-step explicit integration. Stops early when the state leaves
/// options.box; the transverse coordinate is held at exactly 0 when it
/// starts on Z.
Trajectory integrate(const VectorFieldExpr& vf, const Eigen::VectorXd& x0, const FlowOptions& options);

struct LeafReport {
  bool sign_constant = true;
  bool stays_on_z = false;
  double energy_drift = 0.0;
  std::vector<std::pair<std::string, double>> casimir_drift;

  std::string to_text() const;
};

LeafReport leaf_report(const ReducedPoisson& reduced, const Trajectory& trajectory);

/// Lie-Poisson Casimirs of the reduced h* block, named C1, C2, ...
std::vector<std::pair<std::string, Expr>> reduced_casimirs(const TrivializedBundle& bundle);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace blie
