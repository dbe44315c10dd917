#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blie/config.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "blie_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& json) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << json;
  return p;
}

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "blie");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = blie::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Run run_config(const std::string& name, const std::string& json, const std::string& cmd,
               std::vector<std::string> extra = {}) {
  fs::path dir = scratch(name);
  std::vector<std::string> args{"--config", write_config(dir, json).string(), "--out", (dir / "out").string(), cmd};
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> csv_rows(const std::string& text, std::string* header) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

const char* kSe2 = R"({"group": "se2"})";
const char* kCorrupted =
    R"({"group": "se2", "structure_constant_overrides": [{"bracket": ["P1", "P2"], "result": "P1", "value": 1}]})";

const char* kCustom = R"({"group": {"custom": {
  "labels": ["J", "P1", "P2"],
  "basis": [[[0, -1, 0], [1, 0, 0], [0, 0, 0]],
            [[0, 0, 1], [0, 0, 0], [0, 0, 0]],
            [[0, 0, 0], [0, 0, 1], [0, 0, 0]]],
  "subgroup": ["P1", "P2"], "transverse": "J",
  "structure_constants": [{"bracket": ["J", "P1"], "value": {"P2": 1}},
                          {"bracket": ["J", "P2"], "value": {"P1": %s}}]}}})";

std::string custom(const char* coefficient) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, kCustom, coefficient);
  return buf;
}

}  // namespace

TEST_CASE("describe") {
  Run se2 = run_config("describe_se2", kSe2, "describe");
  CHECK(se2.code == 0);
  CHECK(se2.out.find("dim G=3, dim H=2, G/H ≅ S¹\n") != std::string::npos);
  CHECK(se2.out.find("basis: J, P1, P2\n") != std::string::npos);
  CHECK(se2.out.find("subgroup: P1, P2\n") != std::string::npos);
  CHECK(se2.out.find("phi: phi\n") != std::string::npos);
  CHECK(se2.out.find("J,P1,0,0,1\n") != std::string::npos);

  Run gal = run_config("describe_gal", R"({"group": "galilean"})", "describe");
  CHECK(gal.code == 0);
  CHECK(gal.out.find("dim G=10, dim H=9") != std::string::npos);
}

TEST_CASE("config errors exit with 2") {
  const std::vector<std::pair<std::string, std::string>> bad{
      {"json", "{\"group\": "},
      {"unknown_key", R"({"group": "se2", "colour": 1})"},
      {"unknown_group", R"({"group": "so3"})"},
      {"no_group", R"({"mode": "b"})"},
      {"mode", R"({"group": "se2", "mode": "c"})"},
      {"override_label", R"({"group": "se2", "structure_constant_overrides": [{"bracket": ["J", "Q"], "result": "P1", "value": 1}]})"},
      {"xi_size", R"({"group": "se2", "connection": {"type": "deformed", "xi": [1]}})"},
      {"c_vars", R"({"group": "se2", "connection": {"type": "deformed", "xi": [1, 0], "c": "x*phi"}})"},
      {"b_classical", R"({"group": "se2", "mode": "classical", "connection": {"type": "deformed", "xi": [1, 0], "b_form": true}})"},
      {"tolerance", R"({"group": "se2", "verify": {"tolerance": 0}})"},
      {"seed", R"({"group": "se2", "verify": {"seed": -1}})"},
      {"hamiltonian", R"({"group": "se2", "flow": {"hamiltonian": "p +"}})"},
      {"method", R"({"group": "se2", "flow": {"method": "euler"}})"},
      {"custom_subgroup", R"({"group": {"custom": {"labels": ["A", "B"], "basis": [[[0, 1], [0, 0]], [[0, 0], [0, 0]]], "subgroup": ["C"], "transverse": "A"}}})"},
  };
  for (const auto& [name, json] : bad) {
    CAPTURE(name);
    Run r = run_config("bad_" + name, json, "verify");
    CHECK(r.code == 2);
    CHECK(r.err.find("config error: ") == 0);
  }

  Run missing = run({"--config", "/nonexistent/blie.json", "verify"});
  CHECK(missing.code == 2);
  Run x0 = run_config("bad_x0", R"({"group": "se2", "flow": {"x0": {"q": 1}}})", "flow");
  CHECK(x0.code == 2);
  CHECK(x0.err.find("flow.x0") != std::string::npos);
  Run outside = run_config("bad_box", R"({"group": "se2", "flow": {"x0": {"phi": 5000}}})", "flow");
  CHECK(outside.code == 2);
  Run singular = run_config("bad_singular", R"({"group": "se2", "flow": {"hamiltonian": "p^-1"}})", "flow");
  CHECK(singular.code == 2);
  CHECK(run_config("bad_flag", kSe2, "verify", {"--tolerance", "-1"}).code == 2);
  CHECK(run({"verify"}).code == 2);
  CHECK(run_config("bad_cmd", kSe2, "frobnicate").code == 2);
}

TEST_CASE("verify exit codes") {
  Run se2 = run_config("verify_se2", kSe2, "verify");
  CHECK(se2.code == 0);
  CHECK(se2.out.find("status: ok\n") != std::string::npos);
  for (const char* section : {"lie:", "bcalc:", "blift:", "tangent-split:", "cotangent-split:", "annihilator:", "coupling:", "reduction:", "dynamics:"})
    CHECK(se2.out.find(std::string("\n") + section) != std::string::npos);
  CHECK(slurp(fs::temp_directory_path() / "blie_cli_test/verify_se2/out/verify_report.txt") == se2.out);

  Run heis = run_config("verify_heis2", R"({"group": {"builtin": "heisenberg_q", "n": 2}})", "verify");
  CHECK(heis.code == 0);

  Run bad = run_config("verify_corrupted", kCorrupted, "verify");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("lie: Jacobi = ") != std::string::npos);
  CHECK(bad.out.find("failed: lie: Jacobi\n") != std::string::npos);
  CHECK(bad.err.find("verification failed: lie: Jacobi") != std::string::npos);

  Run strict = run_config("verify_strict", kSe2, "verify", {"--tolerance", "1e-30"});
  CHECK(strict.code == 1);
}

TEST_CASE("custom matrix groups") {
  Run good = run_config("custom_good", custom("-1"), "verify");
  CHECK(good.code == 0);
  Run wrong = run_config("custom_wrong", custom("1"), "verify");
  CHECK(wrong.code == 1);
  CHECK(wrong.out.find("failed: lie: structure constants\n") != std::string::npos);
  Run red = run_config("custom_reduce", custom("-1"), "reduce");
  CHECK(red.out == "i,j,bracket\nphi,p,phi\n");
}

TEST_CASE("reduce") {
  Run se2 = run_config("reduce_se2", kSe2, "reduce");
  CHECK(se2.code == 0);
  CHECK(se2.out == "i,j,bracket\nphi,p,phi\n");
  CHECK(slurp(fs::temp_directory_path() / "blie_cli_test/reduce_se2/out/reduced_poisson.csv") == se2.out);

  Run heis = run_config("reduce_heis", R"({"group": "heisenberg_q"})", "reduce");
  CHECK(heis.out == "i,j,bracket\na,p,a\n");

  Run gal = run_config("reduce_gal", R"({"group": "galilean"})", "reduce");
  CHECK(gal.code == 0);
  std::string ambient = slurp(fs::temp_directory_path() / "blie_cli_test/reduce_gal/out/ambient_lie_poisson.csv");
  CHECK(ambient.find("\nmu_K1,mu_E,-mu_P1\n") != std::string::npos);
  CHECK(gal.out.find("s,p,s\n") != std::string::npos);

  Run classical = run_config("reduce_classical", R"({"group": "se2", "mode": "classical"})", "reduce");
  CHECK(classical.out == "i,j,bracket\nphi,p,1\n");
}

TEST_CASE("bracket table") {
  Run t = run_config("table_se2", kSe2, "bracket-table");
  CHECK(t.code == 0);
  CHECK(t.out == "i,j,J,P1,P2\nJ,P1,0,0,1\nJ,P2,0,-1,0\nP1,P2,0,0,0\n");
  Run c = run_config("table_corrupted", kCorrupted, "bracket-table");
  CHECK(c.out.find("P1,P2,0,1,0\n") != std::string::npos);
}

TEST_CASE("flow") {
  Run r = run_config("flow_se2", R"({"group": "se2", "flow": {"hamiltonian": "p", "x0": {"phi": 1}, "dt": 0.001, "T": 1}})",
                     "flow");
  CHECK(r.code == 0);
  CHECK(r.out.find("sign_constant: true\n") == 0);
  std::string header;
  auto rows = csv_rows(slurp(fs::temp_directory_path() / "blie_cli_test/flow_se2/out/trajectory.csv"), &header);
  CHECK(header == "t,mu_P1,mu_P2,phi,p,H,C1,C2");
  REQUIRE(rows.size() == 1001);
  CHECK(std::abs(rows.back()[3] - std::exp(1.0)) <= 1e-6);
  CHECK(slurp(fs::temp_directory_path() / "blie_cli_test/flow_se2/out/leaf_report.txt") == r.out);

  Run z = run_config("flow_z", R"({"group": "se2", "flow": {"hamiltonian": "p^2 + mu_P1*p", "x0": {"phi": 0, "p": 0.3, "mu_P1": 0.2}}})",
                     "flow");
  CHECK(z.code == 0);
  CHECK(z.out.find("stays_on_z: true\n") != std::string::npos);
  bool zero = true;
  for (const auto& row : csv_rows(slurp(fs::temp_directory_path() / "blie_cli_test/flow_z/out/trajectory.csv"), nullptr))
    zero = zero && row[3] == 0.0;
  CHECK(zero);

  Run heis = run_config("flow_heis", R"({"group": "heisenberg_q", "flow": {"hamiltonian": "a*p", "x0": {"a": 0.5, "p": 0.1}}})",
                        "flow");
  CHECK(heis.code == 0);
  CHECK(heis.out.find("casimir_drift.C1: ") != std::string::npos);

  Run exits = run_config("flow_exit", R"({"group": "se2", "flow": {"hamiltonian": "p^2*100", "x0": {"phi": 1, "p": 1}, "T": 1}})",
                         "flow");
  CHECK(exits.code == 0);
  CHECK(exits.out.find("exited: true\nexit_time: ") != std::string::npos);
}

TEST_CASE("determinism") {
  const std::string config =
      R"({"group": "heisenberg_q", "flow": {"hamiltonian": "a*p + p^2/2", "x0": {"a": 0.25}, "T": 0.5}})";
  for (const char* cmd : {"verify", "flow", "reduce"}) {
    CAPTURE(cmd);
    Run a = run_config(std::string("det_a_") + cmd, config, cmd, {"--seed", "7"});
    Run b = run_config(std::string("det_b_") + cmd, config, cmd, {"--seed", "7"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    for (const auto& entry : fs::directory_iterator(fs::temp_directory_path() / ("blie_cli_test/det_a_" + std::string(cmd)) / "out")) {
      fs::path other = fs::temp_directory_path() / ("blie_cli_test/det_b_" + std::string(cmd)) / "out" / entry.path().filename();
      CHECK(slurp(entry.path()) == slurp(other));
    }
  }
  Run s7 = run_config("det_seed7", kSe2, "verify", {"--seed", "7"});
  Run s8 = run_config("det_seed8", kSe2, "verify", {"--seed", "8"});
  CHECK(s7.out.find("seed: 7\n") != std::string::npos);
  CHECK(s8.out.find("seed: 8\n") != std::string::npos);
}

TEST_CASE("output directory precedence") {
  fs::path dir = scratch("precedence");
  fs::path cfg = write_config(dir, R"({"group": "se2", "output_dir": ")" + (dir / "from_config").string() + R"("})");
  CHECK(run({"--config", cfg.string(), "reduce"}).code == 0);
  CHECK(fs::exists(dir / "from_config/reduced_poisson.csv"));

  setenv("BLIE_OUTPUT_DIR", (dir / "from_env").c_str(), 1);
  CHECK(run({"--config", cfg.string(), "reduce"}).code == 0);
  CHECK(fs::exists(dir / "from_env/reduced_poisson.csv"));
  CHECK(run({"--config", cfg.string(), "--out", (dir / "from_flag").string(), "reduce"}).code == 0);
  CHECK(fs::exists(dir / "from_flag/reduced_poisson.csv"));
  unsetenv("BLIE_OUTPUT_DIR");
}

TEST_CASE("parse_config defaults") {
  blie::RunConfig c = blie::parse_config(R"({"group": "se2"})");
  CHECK(c.verify.seed == 42);
  CHECK(c.verify.tolerance == 1e-8);
  CHECK(c.flow.hamiltonian == "p");
  CHECK(c.mode == blie::FrameMode::b);
  CHECK(!c.connection.deformed);
  CHECK(c.output_dir == ".");
  CHECK(blie::parse_config(R"({"group": {"builtin": "heisenberg_q", "n": 3}})").builtin == "heisenberg_q(3)");
}
