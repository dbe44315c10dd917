#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blie/blift.hpp"
#include "blie/lie.hpp"

namespace blie {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A group given by a matrix basis. The chart is the product of one
/// parameter subgroups exp(q_i X_i), so every basis element must be
/// nilpotent or satisfy X^3 = -X.
struct CustomGroup {
  std::string name = "custom";
  std::vector<std::string> labels;
  std::vector<RationalMatrix> basis;
  std::vector<std::string> subgroup;  // labels spanning h
  std::string transverse;             // label of E
  std::string phi = "phi";
  double phi_sample = 1.0;
  double box = 0.5;
  // Declared [e_i, e_j] = sum_k c^k_ij e_k, checked against the commutators.
  std::optional<LieAlgebra> declared;
};

struct StructureOverride {
  std::string i, j, k;
  Rational value;
  bool raw = false;  // set c^k_ij only, not c^k_ji
};

struct ConnectionSpec {
  bool deformed = false;
  std::vector<double> xi;
  std::string c = "1";
  bool b_form = false;
};

struct VerifyOptions {
  std::uint64_t seed = 42;
  int samples = 100;
  int coupling_samples = 200;
  int invariant_pairs = 50;
  int random_forms = 200;
  double tolerance = 1e-8;
};

struct FlowSpec {
  std::string hamiltonian = "p";
  std::map<std::string, double> x0;
  double dt = 1e-3;
  double T = 1.0;
  std::string method = "rk4";
  bool log_phi = false;
};

struct RunConfig {
  std::string builtin;  // empty when custom is set
  std::optional<CustomGroup> custom;
  std::vector<StructureOverride> overrides;
  FrameMode mode = FrameMode::b;
  ConnectionSpec connection;
  VerifyOptions verify;
  FlowSpec flow;
  std::string output_dir = ".";
};

/// Parses the JSON config text; every error is a ConfigError.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

BLieGroupPair build_pair(const RunConfig& config);

/// Structure constants the configuration claims for G: the declared table
/// for custom groups (else the commutator table), with overrides applied.
LieAlgebra declared_algebra(const RunConfig& config, const BLieGroupPair& pair);

}  // namespace blie
