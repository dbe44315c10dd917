#pragma once

#include <string>
#include <vector>

#include "blie/config.hpp"
#include "blie/dynamics.hpp"
#include "blie/reduction.hpp"

namespace blie {

/// One line of a verification report. Exact checks count violations and
/// use tolerance 0.
struct Check {
  std::string section;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;

  bool ok() const { return value <= tolerance; }
};

struct VerifyReport {
  std::string group;
  std::uint64_t seed = 0;
  std::vector<Check> checks;

  bool ok() const;
  /// "section: name" for every failing check, in report order.
  std::vector<std::string> failures() const;
  /// Structured text: one "section: name = value (<= tol) ok|FAIL" line per
  /// check, followed by "status:" and "failed:" lines.
  std::string to_text() const;
};

/// The connections every suite runs on: default, a smooth deformation, a
/// b-deformation (b mode only) and the configured one when it is deformed.
std::vector<std::pair<std::string, Connection>> suite_connections(const RunConfig& config,
                                                                  const TrivializedBundle& bundle);

/// Reduced flow from the config's flow options. Unset initial values are 0,
/// except the transverse coordinate which defaults to 1.
struct FlowSetup {
  ReducedPoisson reduced;
  VectorFieldExpr field;
  Eigen::VectorXd x0;
  FlowOptions options;
};

FlowSetup make_flow(const RunConfig& config, const TrivializedBundle& bundle);

VerifyReport run_verify(const RunConfig& config);

}  // namespace blie
