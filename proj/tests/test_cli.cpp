#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tsvar/errors.hpp"
#include "tsvar/problem.hpp"
#include "tsvar/runner.hpp"

using namespace tsvar;
namespace fs = std::filesystem;

namespace {

const char* kExample1 = R"(# worked nonuniform problem
[timescale]
kind = geometric
t0 = 1
ratio = 2
count = 21

[lagrangian]
expr = t + qs*qd

[generator g1]
tau = 0
xi = ln(t)/ln(2)

[initial]
q0 = 0
v0 = 1
)";

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("tsvar_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TSVAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("problem files parse into specs") {
  const ProblemSpec spec = parse_problem(kExample1, "example1");
  CHECK(spec.timescale.kind == ScaleKind::Geometric);
  CHECK(spec.timescale.count == 21);
  CHECK(spec.lagrangian.str() == "t + qs*qd");
  REQUIRE(spec.generators.size() == 1);
  CHECK(spec.generators[0].name == "g1");
  REQUIRE(spec.initial);
  CHECK(spec.initial->second == 1.0);
  CHECK(!spec.acceleration);
}

TEST_CASE("problem files reject structural mistakes with line numbers") {
  // Both [initial] and [boundary].
  CHECK_THROWS_AS(parse_problem(std::string(kExample1) + "\n[boundary]\na = 0\nb = 4\n",
                                "p"),
                  InputError);

  // Generator referencing qd (outside the generator alphabet).
  try {
    parse_problem("[timescale]\nkind = uniform\na = 0\nb = 1\ncount = 5\n"
                  "[lagrangian]\nexpr = qd^2/2\n"
                  "[generator g]\ntau = 0\nxi = qd\n"
                  "[initial]\nq0 = 0\nv0 = 1\n",
                  "p");
    FAIL("expected InputError");
  } catch (const InputError& err) {
    const std::string what = err.what();
    CHECK(what.find("qd") != std::string::npos);
    CHECK(what.find("p:9") != std::string::npos);
  }

  // Duplicate key carries both line numbers.
  try {
    parse_problem("[timescale]\nkind = uniform\na = 0\na = 1\n", "p");
    FAIL("expected InputError");
  } catch (const InputError& err) {
    CHECK(std::string(err.what()).find("p:4") != std::string::npos);
  }

  // Missing sections.
  CHECK_THROWS_AS(parse_problem("[lagrangian]\nexpr = qd\n", "p"), InputError);
  CHECK_THROWS_AS(parse_problem(kExample1 + std::string("[junk]\nx = 1\n"), "p"),
                  InputError);
}

TEST_CASE("run_problem produces the expected verdicts and files") {
  const ProblemSpec spec = parse_problem(kExample1, "example1");
  const fs::path dir = temp_dir("run_api");
  const RunReport report = run_problem(spec, dir.string(), {}, "example1");

  CHECK(report.pass());
  CHECK(report.el_rel <= 1e-10);
  REQUIRE(report.generators.size() == 1);
  CHECK(report.generators[0].determining_rel <= 1e-10);
  CHECK(report.generators[0].drift_rel <= 1e-10);
  CHECK(report.generators[0].drift_gated);
  CHECK(exit_code_for(report) == 0);

  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "sym_g1.csv"));
  CHECK(fs::exists(dir / "report.txt"));

  const std::string traj = slurp(dir / "trajectory.csv");
  CHECK(traj.rfind("index,t,mu,q,qsigma,qdelta,qdeltadelta\n", 0) == 0);
  const std::string sym = slurp(dir / "sym_g1.csv");
  CHECK(sym.rfind("index,t,det_residual,G,I,structure_res,noether_res\n", 0) == 0);
  const std::string rep = slurp(dir / "report.txt");
  CHECK(rep.find("verdict: PASS") != std::string::npos);
}

TEST_CASE("oscillator with tau = 1 reports drift without gating the verdict") {
  const char* text = R"(
[timescale]
kind = uniform
a = 0
b = 12
count = 13

[lagrangian]
expr = qd^2/2 - qs^2/2

[generator shift]
tau = 1
xi = 0

[initial]
q0 = 0
v0 = 1
)";
  const ProblemSpec spec = parse_problem(text, "oscillator");
  const fs::path dir = temp_dir("run_osc");
  const RunReport report = run_problem(spec, dir.string(), {}, "oscillator");

  REQUIRE(report.generators.size() == 1);
  const GeneratorVerdict& gen = report.generators[0];
  CHECK(gen.determining_pass);
  CHECK(!gen.drift_ok);
  CHECK(gen.drift == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(!gen.drift_gated);
  CHECK(report.pass());  // tau != 0 drift is reported, not gated

  const std::string rep = slurp(dir / "report.txt");
  CHECK(rep.find("conserved-quantity drift exceeds tolerance") != std::string::npos);
  CHECK(report.discrete_checked);
}

TEST_CASE("cli: worked problem passes end to end") {
  const fs::path dir = temp_dir("cli_pass");
  const fs::path problems = fs::path(TSVAR_PROBLEMS_DIR);
  const int code =
      run_cli("run " + (problems / "example1.problem").string() + " --out " +
              (dir / "out").string());
  CHECK(code == 0);
  CHECK(fs::exists(dir / "out" / "report.txt"));
}

TEST_CASE("cli: identical input produces byte-identical outputs") {
  const fs::path dir = temp_dir("cli_det");
  const fs::path problems = fs::path(TSVAR_PROBLEMS_DIR);
  const std::string problem = (problems / "example1.problem").string();
  REQUIRE(run_cli("run " + problem + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run_cli("run " + problem + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
  CHECK(slurp(dir / "a" / "sym_g1.csv") == slurp(dir / "b" / "sym_g1.csv"));
  CHECK(slurp(dir / "a" / "report.txt") == slurp(dir / "b" / "report.txt"));
}

TEST_CASE("cli: exit code 1 when a gated tolerance fails") {
  // Perturbed boundary problem: the worked scale with a deliberately tight
  // residual tolerance and a wrong generator.
  const fs::path dir = temp_dir("cli_tol");
  std::ofstream out(dir / "bad_gen.problem");
  out << "[timescale]\nkind = geometric\nt0 = 1\nratio = 2\ncount = 21\n"
      << "[lagrangian]\nexpr = t + qs*qd\n"
      << "[generator wrong]\ntau = 0\nxi = t^2\n"
      << "[initial]\nq0 = 0\nv0 = 1\n";
  out.close();
  const int code = run_cli("run " + (dir / "bad_gen.problem").string() +
                           " --out " + (dir / "out").string());
  CHECK(code == 1);
}

TEST_CASE("cli: exit code 2 for malformed input, no outputs written") {
  const fs::path dir = temp_dir("cli_bad");
  std::ofstream out(dir / "broken.problem");
  out << "[timescale\nkind = uniform\n";
  out.close();
  const int code = run_cli("run " + (dir / "broken.problem").string() +
                           " --out " + (dir / "out").string());
  CHECK(code == 2);
  CHECK(!fs::exists(dir / "out" / "report.txt"));
}

TEST_CASE("cli: exit code 3 for numeric failures") {
  // Unreachable boundary data on the oscillator (period-6 null direction).
  const fs::path dir = temp_dir("cli_numeric");
  std::ofstream out(dir / "unreachable.problem");
  out << "[timescale]\nkind = uniform\na = 0\nb = 6\ncount = 7\n"
      << "[lagrangian]\nexpr = qd^2/2 - qs^2/2\n"
      << "[boundary]\na = 0\nb = 1\n";
  out.close();
  const int code = run_cli("run " + (dir / "unreachable.problem").string() +
                           " --out " + (dir / "out").string());
  CHECK(code == 3);
}

TEST_CASE("cli: search flag reports ranked candidates") {
  const fs::path dir = temp_dir("cli_search");
  const fs::path problems = fs::path(TSVAR_PROBLEMS_DIR);
  const int code = run_cli("run " + (problems / "example1.problem").string() +
                           " --out " + (dir / "out").string() + " --search " +
                           (problems / "example1_basis.txt").string());
  CHECK(code == 0);
  const std::string rep = slurp(dir / "out" / "report.txt");
  CHECK(rep.find("generator search") != std::string::npos);
  CHECK(rep.find("candidate 1") != std::string::npos);
}
