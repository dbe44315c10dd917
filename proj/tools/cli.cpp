#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "blie/config.hpp"
#include "blie/verify.hpp"

namespace blie {

namespace {

struct Paths {
  std::filesystem::path dir;

  void write(const std::string& name, const std::string& text) const {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
  }
};

Paths output_paths(const RunConfig& config, const std::string& flag) {
  std::string dir = config.output_dir;
  if (const char* env = std::getenv("BLIE_OUTPUT_DIR"); env && *env) dir = env;
  if (!flag.empty()) dir = flag;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return {dir};
}

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string describe(const RunConfig& config) {
  BLieGroupPair pair = build_pair(config);
  const auto& labels = pair.group.labels();
  std::vector<std::string> base = pair.coordinates();
  base.pop_back();
  std::ostringstream os;
  os << "group: " << pair.name << "\n";
  os << "dim G=" << pair.group.dim() << ", dim H=" << pair.subgroup.dim() << ", G/H ≅ " << pair.quotient << "\n";
  os << "basis: " << join(labels) << "\n";
  os << "subgroup: " << join(pair.subgroup.labels()) << "\n";
  os << "transverse: " << labels[static_cast<std::size_t>(pair.transverse_generator)] << "\n";
  os << "phi: " << pair.phi << "\n";
  os << "trivialization: g = h(" << join(base) << ") exp(" << pair.phi << " "
     << labels[static_cast<std::size_t>(pair.transverse_generator)] << ")\n";
  os << "mode: " << (config.mode == FrameMode::b ? "b" : "classical") << "\n";
  os << "brackets:\n" << bracket_table_csv(declared_algebra(config, pair));
  return os.str();
}

std::string ambient_table(const BLieGroupPair& pair) {
  const LieAlgebra& g = pair.group.algebra();
  auto names = g.dual_coordinate_names();
  PoissonBivector lp(names);
  for (int i = 0; i < g.dim(); ++i)
    for (int j = i + 1; j < g.dim(); ++j)
      lp.set(i, j,
             lie_poisson_expr(g, Expr::variable(names[static_cast<std::size_t>(i)]),
                              Expr::variable(names[static_cast<std::size_t>(j)]), names));
  return lp.to_csv();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"b-symplectic reduction on b-Lie groups", "blie"};
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "overrides verify.seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tolerance", tolerance, "overrides verify.tolerance");
  app.require_subcommand(1, 1);
  app.fallthrough();
  auto* describe_cmd = app.add_subcommand("describe", "print the group, subgroup and trivialization");
  auto* verify_cmd = app.add_subcommand("verify", "run every verification suite");
  auto* reduce_cmd = app.add_subcommand("reduce", "emit the reduced Poisson bivector as CSV");
  auto* flow_cmd = app.add_subcommand("flow", "integrate a reduced Hamiltonian flow");
  auto* table_cmd = app.add_subcommand("bracket-table", "emit the structure constants as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig config = load_config(config_path);
    if (seed) config.verify.seed = *seed;
    if (tolerance) {
      if (!(*tolerance > 0.0)) throw ConfigError("--tolerance must be positive");
      config.verify.tolerance = *tolerance;
    }

    if (describe_cmd->parsed()) {
      out << describe(config);
      return 0;
    }
    Paths paths = output_paths(config, out_dir);
    if (table_cmd->parsed()) {
      std::string csv = bracket_table_csv(declared_algebra(config, build_pair(config)));
      paths.write("bracket_table.csv", csv);
      out << csv;
      return 0;
    }
    if (reduce_cmd->parsed()) {
      BLieGroupPair pair = build_pair(config);
      std::string csv = reduced_poisson(TrivializedBundle(pair, config.mode)).bivector.to_csv();
      paths.write("reduced_poisson.csv", csv);
      paths.write("ambient_lie_poisson.csv", ambient_table(pair));
      out << csv;
      return 0;
    }
    if (flow_cmd->parsed()) {
      TrivializedBundle bundle(build_pair(config), config.mode);
      FlowSetup f = make_flow(config, bundle);
      Trajectory tr;
      try {
        tr = integrate(f.field, f.x0, f.options);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("flow: ") + e.what());
      } catch (const ExprError& e) {
        throw ConfigError(std::string("flow.hamiltonian: ") + e.what());
      }
      std::string report = leaf_report(f.reduced, tr).to_text();
      report += "steps: " + std::to_string(tr.times.size() - 1) + "\n";
      report += "exited: " + std::string(tr.exited ? "true" : "false") + "\n";
      if (tr.exited) report += "exit_time: " + format_double(tr.exit_time) + "\n";
      std::string final_state;
      for (std::size_t i = 0; i < tr.coords.size(); ++i)
        final_state += "final." + tr.coords[i] + ": " + format_double(tr.states.back()(static_cast<Eigen::Index>(i))) + "\n";
      report += final_state;
      paths.write("trajectory.csv", tr.to_csv());
      paths.write("leaf_report.txt", report);
      out << report;
      return 0;
    }
    (void)verify_cmd;
    VerifyReport report = run_verify(config);
    std::string text = report.to_text();
    paths.write("verify_report.txt", text);
    out << text;
    if (!report.ok()) {
      for (const auto& f : report.failures()) err << "verification failed: " << f << "\n";
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace blie
