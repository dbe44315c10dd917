#include "blie/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace blie {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": wrong type");
  }
}

Rational rational(const json& j, const std::string& where) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_string()) {
    try {
      return Rational::parse(j.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + ": expected an integer or a \"p/q\" string");
}

int label_index(const std::vector<std::string>& labels, const std::string& l, const std::string& where) {
  auto it = std::find(labels.begin(), labels.end(), l);
  if (it == labels.end()) throw ConfigError(where + ": unknown basis label '" + l + "'");
  return static_cast<int>(it - labels.begin());
}

LieAlgebra parse_constants(const json& j, const std::vector<std::string>& labels) {
  if (!j.is_array()) throw ConfigError("structure_constants: expected an array");
  LieAlgebra alg(static_cast<int>(labels.size()), labels);
  for (const auto& e : j) {
    only_keys(e, "structure_constants", {"bracket", "value"});
    if (!e.contains("bracket")) throw ConfigError("structure_constants: bracket is required");
    auto pair = get<std::vector<std::string>>(e["bracket"], "structure_constants.bracket");
    if (pair.size() != 2) throw ConfigError("structure_constants.bracket: expected two labels");
    int a = label_index(labels, pair[0], "structure_constants");
    int b = label_index(labels, pair[1], "structure_constants");
    if (!e.contains("value") || !e["value"].is_object()) throw ConfigError("structure_constants.value: expected an object");
    for (const auto& [l, c] : e["value"].items())
      alg.set_bracket(a, b, label_index(labels, l, "structure_constants"), rational(c, "structure_constants.value"));
  }
  return alg;
}

CustomGroup parse_custom(const json& j) {
  only_keys(j, "group.custom",
            {"name", "labels", "basis", "subgroup", "transverse", "phi", "phi_sample", "box", "structure_constants"});
  CustomGroup g;
  if (j.contains("name")) g.name = get<std::string>(j["name"], "group.custom.name");
  if (!j.contains("labels") || !j.contains("basis") || !j.contains("subgroup") || !j.contains("transverse"))
    throw ConfigError("group.custom: labels, basis, subgroup and transverse are required");
  g.labels = get<std::vector<std::string>>(j["labels"], "group.custom.labels");
  if (!j["basis"].is_array() || j["basis"].size() != g.labels.size())
    throw ConfigError("group.custom.basis: one matrix per label");
  for (const auto& m : j["basis"]) {
    if (!m.is_array() || m.empty()) throw ConfigError("group.custom.basis: expected square matrices");
    const int n = static_cast<int>(m.size());
    RationalMatrix r(n, n);
    for (int a = 0; a < n; ++a) {
      if (!m[a].is_array() || static_cast<int>(m[a].size()) != n)
        throw ConfigError("group.custom.basis: expected square matrices");
      for (int b = 0; b < n; ++b) r(a, b) = rational(m[a][b], "group.custom.basis");
    }
    if (!g.basis.empty() && g.basis.front().rows() != n) throw ConfigError("group.custom.basis: sizes differ");
    g.basis.push_back(r);
  }
  g.subgroup = get<std::vector<std::string>>(j["subgroup"], "group.custom.subgroup");
  g.transverse = get<std::string>(j["transverse"], "group.custom.transverse");
  for (const auto& l : g.subgroup) label_index(g.labels, l, "group.custom.subgroup");
  label_index(g.labels, g.transverse, "group.custom.transverse");
  if (g.subgroup.size() + 1 != g.labels.size() ||
      std::find(g.subgroup.begin(), g.subgroup.end(), g.transverse) != g.subgroup.end())
    throw ConfigError("group.custom: the subgroup must be all labels except the transverse one");
  if (j.contains("phi")) g.phi = get<std::string>(j["phi"], "group.custom.phi");
  if (j.contains("phi_sample")) g.phi_sample = get<double>(j["phi_sample"], "group.custom.phi_sample");
  if (j.contains("box")) g.box = get<double>(j["box"], "group.custom.box");
  if (!(g.phi_sample > 0.0) || !(g.box > 0.0)) throw ConfigError("group.custom: phi_sample and box must be positive");
  if (j.contains("structure_constants")) g.declared = parse_constants(j["structure_constants"], g.labels);
  return g;
}

double positive(const json& j, const std::string& where) {
  double v = get<double>(j, where);
  if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
  return v;
}

int positive_int(const json& j, const std::string& where) {
  int v = get<int>(j, where);
  if (v <= 0) throw ConfigError(where + ": must be positive");
  return v;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "config", {"group", "structure_constant_overrides", "mode", "connection", "verify", "flow", "output_dir"});
  RunConfig c;
  if (!j.contains("group")) throw ConfigError("config: 'group' is required");
  const json& g = j["group"];
  if (g.is_string()) {
    c.builtin = g.get<std::string>();
  } else if (g.is_object() && g.contains("custom")) {
    only_keys(g, "group", {"custom"});
    c.custom = parse_custom(g["custom"]);
  } else if (g.is_object() && g.contains("builtin")) {
    only_keys(g, "group", {"builtin", "n"});
    c.builtin = get<std::string>(g["builtin"], "group.builtin");
    if (g.contains("n")) {
      if (c.builtin != "heisenberg_q") throw ConfigError("group.n only applies to heisenberg_q");
      c.builtin += "(" + std::to_string(positive_int(g["n"], "group.n")) + ")";
    }
  } else {
    throw ConfigError("group: expected a builtin name, {\"builtin\": ...} or {\"custom\": ...}");
  }
  if (!c.custom) {
    try {
      (void)builtin(c.builtin);
    } catch (const LieError& e) {
      throw ConfigError(std::string("group: ") + e.what());
    }
  }

  if (j.contains("structure_constant_overrides")) {
    if (!j["structure_constant_overrides"].is_array()) throw ConfigError("structure_constant_overrides: expected an array");
    for (const auto& o : j["structure_constant_overrides"]) {
      only_keys(o, "structure_constant_overrides", {"bracket", "result", "value", "raw"});
      if (!o.contains("bracket") || !o.contains("result") || !o.contains("value"))
        throw ConfigError("structure_constant_overrides: bracket, result and value are required");
      auto pair = get<std::vector<std::string>>(o["bracket"], "structure_constant_overrides.bracket");
      if (pair.size() != 2) throw ConfigError("structure_constant_overrides.bracket: expected two labels");
      StructureOverride s{pair[0], pair[1], get<std::string>(o["result"], "structure_constant_overrides.result"),
                          rational(o["value"], "structure_constant_overrides.value")};
      if (o.contains("raw")) s.raw = get<bool>(o["raw"], "structure_constant_overrides.raw");
      c.overrides.push_back(s);
    }
  }

  if (j.contains("mode")) {
    auto m = get<std::string>(j["mode"], "mode");
    if (m == "b")
      c.mode = FrameMode::b;
    else if (m == "classical")
      c.mode = FrameMode::classical;
    else
      throw ConfigError("mode: expected \"b\" or \"classical\"");
  }

  if (j.contains("connection")) {
    const json& k = j["connection"];
    only_keys(k, "connection", {"type", "xi", "c", "b_form"});
    auto type = k.contains("type") ? get<std::string>(k["type"], "connection.type") : std::string("default");
    if (type == "deformed") {
      c.connection.deformed = true;
      if (!k.contains("xi")) throw ConfigError("connection: a deformed connection needs xi");
      c.connection.xi = get<std::vector<double>>(k["xi"], "connection.xi");
      if (k.contains("c")) c.connection.c = get<std::string>(k["c"], "connection.c");
      if (k.contains("b_form")) c.connection.b_form = get<bool>(k["b_form"], "connection.b_form");
    } else if (type != "default") {
      throw ConfigError("connection.type: expected \"default\" or \"deformed\"");
    }
  }

  if (j.contains("verify")) {
    const json& v = j["verify"];
    only_keys(v, "verify", {"seed", "samples", "coupling_samples", "invariant_pairs", "random_forms", "tolerance"});
    if (v.contains("seed")) {
      if (!v["seed"].is_number_unsigned()) throw ConfigError("verify.seed: expected a non-negative integer");
      c.verify.seed = v["seed"].get<std::uint64_t>();
    }
    if (v.contains("samples")) c.verify.samples = positive_int(v["samples"], "verify.samples");
    if (v.contains("coupling_samples")) c.verify.coupling_samples = positive_int(v["coupling_samples"], "verify.coupling_samples");
    if (v.contains("invariant_pairs")) c.verify.invariant_pairs = positive_int(v["invariant_pairs"], "verify.invariant_pairs");
    if (v.contains("random_forms")) c.verify.random_forms = positive_int(v["random_forms"], "verify.random_forms");
    if (v.contains("tolerance")) c.verify.tolerance = positive(v["tolerance"], "verify.tolerance");
  }

  if (j.contains("flow")) {
    const json& f = j["flow"];
    only_keys(f, "flow", {"hamiltonian", "x0", "dt", "T", "method", "log_phi"});
    if (f.contains("hamiltonian")) c.flow.hamiltonian = get<std::string>(f["hamiltonian"], "flow.hamiltonian");
    if (f.contains("x0")) c.flow.x0 = get<std::map<std::string, double>>(f["x0"], "flow.x0");
    if (f.contains("dt")) c.flow.dt = positive(f["dt"], "flow.dt");
    if (f.contains("T")) c.flow.T = positive(f["T"], "flow.T");
    if (f.contains("method")) c.flow.method = get<std::string>(f["method"], "flow.method");
    if (f.contains("log_phi")) c.flow.log_phi = get<bool>(f["log_phi"], "flow.log_phi");
    if (c.flow.method != "rk4" && c.flow.method != "midpoint") throw ConfigError("flow.method: expected rk4 or midpoint");
    if (c.flow.T < c.flow.dt) throw ConfigError("flow: T must be at least dt");
    try {
      (void)parse(c.flow.hamiltonian);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("flow.hamiltonian: ") + e.what());
    }
  }
  if (j.contains("output_dir")) c.output_dir = get<std::string>(j["output_dir"], "output_dir");

  // Cross-field checks need the group.
  BLieGroupPair pair = build_pair(c);
  (void)declared_algebra(c, pair);
  if (c.connection.deformed) {
    if (static_cast<int>(c.connection.xi.size()) != pair.subgroup.dim())
      throw ConfigError("connection.xi: needs one entry per subgroup generator");
    if (c.connection.b_form && c.mode == FrameMode::classical)
      throw ConfigError("connection: a b_form deformation needs mode \"b\"");
    try {
      std::set<std::string, std::less<>> allowed{pair.phi};
      (void)parse(c.connection.c, allowed);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("connection.c: ") + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::vector<Expr> product_chart(const std::vector<RationalMatrix>& basis, const std::vector<std::string>& params, int m) {
  std::vector<Expr> chart;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) chart.push_back(Expr(i == j ? 1 : 0));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    std::vector<Expr> f = exp_generator(basis[k], Expr::variable(params[k]));
    chart = multiply(chart, f, m);
  }
  return chart;
}

BLieGroupPair build_custom(const CustomGroup& g) {
  const int m = g.basis.front().rows();
  std::vector<std::string> params;
  for (const auto& l : g.labels) params.push_back("q_" + l);
  BLieGroupPair pair;
  pair.name = g.name;
  pair.group = MatrixGroup(g.name, m, params, product_chart(g.basis, params, m), g.basis, g.labels);
  std::vector<RationalMatrix> hbasis;
  std::vector<std::string> hparams;
  for (const auto& l : g.subgroup) {
    int i = label_index(g.labels, l, "group.custom.subgroup");
    pair.subgroup_basis.push_back(i);
    hbasis.push_back(g.basis[static_cast<std::size_t>(i)]);
    hparams.push_back("q_" + l);
  }
  pair.subgroup = MatrixGroup(g.name + "_H", m, hparams, product_chart(hbasis, hparams, m), hbasis, g.subgroup);
  pair.transverse_generator = label_index(g.labels, g.transverse, "group.custom.transverse");
  pair.phi = g.phi;
  pair.section = exp_generator(g.basis[static_cast<std::size_t>(pair.transverse_generator)], Expr::variable(g.phi));
  pair.phi_range = std::numeric_limits<double>::infinity();
  pair.phi_sample = g.phi_sample;
  pair.subgroup_box.assign(hbasis.size(), {-g.box, g.box});
  pair.subgroup_domain.assign(hbasis.size(),
                              {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  pair.quotient = "R (local chart)";
  return pair;
}

}  // namespace

BLieGroupPair build_pair(const RunConfig& config) {
  try {
    if (config.custom) return build_custom(*config.custom);
    return builtin(config.builtin);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("group: ") + e.what());
  }
}

LieAlgebra declared_algebra(const RunConfig& config, const BLieGroupPair& pair) {
  LieAlgebra alg = (config.custom && config.custom->declared) ? *config.custom->declared : pair.group.algebra();
  const auto& labels = pair.group.labels();
  for (const auto& o : config.overrides) {
    int i = label_index(labels, o.i, "structure_constant_overrides");
    int j = label_index(labels, o.j, "structure_constant_overrides");
    int k = label_index(labels, o.k, "structure_constant_overrides");
    if (o.raw)
      alg.set_raw(i, j, k, o.value);
    else
      alg.set_bracket(i, j, k, o.value);
  }
  return alg;
}

}  // namespace blie
