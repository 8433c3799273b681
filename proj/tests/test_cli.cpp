#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "divcap/commands.hpp"
#include "divcap/csv.hpp"
#include "support.hpp"

using namespace divcap;
using namespace divcap::testing;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"({
  // comments are allowed
  "mu": 1, "sigma": 1, "q": 1, "beta": 1.2,
  "cap": {"kind": "affine", "coefficients": [0.5, 0.5]},
  "sim": {"n_paths": 4000}
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("divcap_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DIVCAP_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("parse_config reads nested sections") {
  const RunConfig c = parse_config(kBase);
  CHECK(c.params->beta() == 1.2);
  CHECK(c.cap->kind() == CapKind::Affine);
  CHECK(c.sim.n_paths == 4000);
  CHECK(c.sim.dt == 1e-3);
  CHECK(c.numerics.grid_n == 4001);
  CHECK(c.simulate.strategy == Boundary::Reflect);
  CHECK_FALSE(c.simulate.b.has_value());
}

TEST_CASE("malformed configs name the bad key") {
  CHECK(error_of(R"({"mu":1,"sigma":1,"q":1,"beta":1.2,"cap":{"kind":"affine","coefficients":[0.5,0.5]},"numerics":{"tol":"x"}})")
            .find("numerics.tol") != std::string::npos);
  CHECK(error_of(R"({"mu":1,"sigma":1,"q":1,"beta":1.2,"cap":{"kind":"affine","coefficients":[0.5,0.5]},"sim":{"n_path":5}})")
            .find("sim.n_path") != std::string::npos);
  CHECK(error_of(R"({"mu":1,"sigma":1,"beta":1.2,"cap":{"kind":"affine","coefficients":[0.5,0.5]}})").find("'q'") !=
        std::string::npos);
  CHECK(error_of(R"({"mu":1,"sigma":1,"q":1,"beta":1.2,"cap":{"kind":"spline","coefficients":[0.5]}})")
            .find("cap.kind") != std::string::npos);
  CHECK(error_of("{not json").find("ConfigError") != std::string::npos);
  CHECK(error_of(R"({"mu":1,"sigma":1,"q":1,"beta":1.0,"cap":{"kind":"constant","coefficients":[1]}})")
            .find("BetaNotAboveOne") != std::string::npos);
  CHECK(is_config_error(ErrorCode::BetaNotAboveOne));
  CHECK_FALSE(is_config_error(ErrorCode::IntegrationFailed));
}

TEST_CASE("cmd_solve: constant cap regime matches the discriminant") {
  for (double beta : {1.05, 1.5, 3.0}) {
    RunConfig c = parse_config(kBase);
    c.raw.beta = beta;
    c.cap_spec = {CapKind::Constant, {1.5}};
    revalidate(c);
    const SolveReport r = cmd_solve(c);
    if (r.vd_prime_zero > beta) CHECK(r.regime == RegimeKind::Bailout);
    else CHECK(r.regime == RegimeKind::NoInjection);
  }
}

TEST_CASE("cmd_solve writes report and value grid") {
  const fs::path out = scratch("solve");
  const RunConfig c = parse_config(kBase);
  const SolveReport r = cmd_solve(c, out);
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(j["b_d"].get<double>() == r.b_d);
  CHECK(j["regime"] == "Bailout");
  const auto rows = read_csv(out / "value_grid.csv");
  REQUIRE(rows.size() == c.output.grid_n + 1);
  CHECK(rows[0] == std::vector<std::string>{"x", "V_d", "V_c", "V", "V_prime", "rate"});
  CHECK(std::stod(rows[1][2]) == r.vc_zero);  // round-trip formatting
  for (std::size_t i = 1; i < rows.size(); ++i) REQUIRE(std::stod(rows[i][3]) >= std::stod(rows[i][1]));
}

TEST_CASE("cmd_solve with a zero cap") {
  const fs::path out = scratch("zero");
  RunConfig c = parse_config(kBase);
  c.cap_spec = {CapKind::Constant, {0.0}};
  revalidate(c);
  CHECK(cmd_solve(c, out).regime == RegimeKind::NoInjection);
  const auto rows = read_csv(out / "value_grid.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(std::stod(rows[i][3]) == 0.0);
    REQUIRE(std::stod(rows[i][5]) == 0.0);
  }
}

TEST_CASE("cmd_sweep over beta flips once and isolates bad rows") {
  const RunConfig c = parse_config(kBase);
  std::vector<double> betas;
  for (int i = 0; i < 12; ++i) betas.push_back(1.05 + 0.1 * i);
  const auto rows = cmd_sweep(c, "beta", betas);
  int flips = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) flips += rows[i].report->regime != rows[i - 1].report->regime;
  CHECK(flips == 1);
  CHECK(rows.front().report->regime == RegimeKind::Bailout);
  CHECK(rows.back().report->regime == RegimeKind::NoInjection);

  const fs::path out = scratch("sweep");
  const auto mixed = cmd_sweep(c, "beta", {1.5, 1.0, 2.0}, out);
  CHECK(mixed[0].report);
  CHECK_FALSE(mixed[1].report);
  CHECK(mixed[1].error == "BetaNotAboveOne");
  CHECK(mixed[2].report);
  const auto csv = read_csv(out / "sweep.csv");
  REQUIRE(csv.size() == 4);
  CHECK(csv[0][0] == "beta");
  CHECK(csv[2][5] == "error");
  CHECK(csv[2][6] == "BetaNotAboveOne");

  CHECK_THROWS_WITH_AS(cmd_sweep(c, "gamma", {1.0}), doctest::Contains("gamma"), Error);
  CHECK_THROWS_AS(cmd_sweep(c, "cap.7", {1.0}), Error);
}

TEST_CASE("single-value sweep reproduces cmd_solve") {
  RunConfig c = parse_config(kBase);
  const auto rows = cmd_sweep(c, "cap.1", {0.8});
  c.cap_spec.coefficients[1] = 0.8;
  revalidate(c);
  const SolveReport s = cmd_solve(c);
  REQUIRE(rows[0].report);
  CHECK(rows[0].report->b_d == s.b_d);
  CHECK(rows[0].report->b_c == s.b_c);
  CHECK(rows[0].report->vd_prime_zero == s.vd_prime_zero);
  CHECK(rows[0].report->vc_zero == s.vc_zero);
  CHECK(rows[0].report->regime == s.regime);
}

TEST_CASE("cmd_verify: analytic suite passes, simulation items skipped") {
  const VerifyReport r = cmd_verify(parse_config(kBase), false);
  CHECK(r.passed());
  std::size_t skipped = 0;
  for (const CheckResult& c : r.checks) {
    if (c.name.rfind("mc_", 0) == 0 || c.name.rfind("domination", 0) == 0) {
      CHECK(c.status == CheckStatus::Skipped);
      ++skipped;
    } else {
      CHECK_MESSAGE(c.status == CheckStatus::Pass, c.name);
    }
  }
  CHECK(skipped > 0);
}

TEST_CASE("cmd_verify: coarse tolerance fails the residual checks by name") {
  RunConfig c = parse_config(kBase);
  c.numerics.tol = 1e-2;
  const VerifyReport r = cmd_verify(c, false);
  CHECK_FALSE(r.passed());
  REQUIRE(r.find("ode_residual_phi"));
  CHECK(r.find("ode_residual_phi")->status == CheckStatus::Fail);
  CHECK(r.find("ode_residual_IF")->status == CheckStatus::Fail);
}

TEST_CASE("cmd_verify with simulation on the reference config") {
  const fs::path out = scratch("verify");
  RunConfig c = parse_config(kBase);
  c.sim.n_paths = 20000;
  c.verify.mc_points = {1.0};
  c.verify.domination_paths = 2000;
  const VerifyReport r = cmd_verify(c, true, out);
  for (const CheckResult& ch : r.checks) CHECK_MESSAGE(ch.status == CheckStatus::Pass, ch.name, " ", ch.detail);
  const auto j = nlohmann::json::parse(slurp(out / "verify.json"));
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() == r.checks.size());
}

TEST_CASE("cmd_simulate: refracted at zero is ruined immediately") {
  RunConfig c = parse_config(kBase);
  c.simulate.strategy = Boundary::Absorb;
  const auto j = nlohmann::json::parse(cmd_simulate(c));
  CHECK(j["mean"].get<double>() == 0.0);
  CHECK(j["strategy"] == "refracted");
  CHECK(j["seed"] == c.sim.seed);
}

TEST_CASE("cmd_simulate: reflected at b_c matches V_c(0) within the error budget") {
  RunConfig c = parse_config(kBase);
  c.sim.n_paths = 20000;
  const auto j = nlohmann::json::parse(cmd_simulate(c));
  const ModelSolution m = solve_model(*c.params, *c.cap);
  const Regime r = decide_regime(m);
  CHECK(j["b"].get<double>() == r.b_c);
  // Same seed and paths: the fine level of the refinement study is this estimate.
  SimConfig sc = c.sim;
  sc.multilevel = true;
  const RefinementStudy s = refine(Functional::Jc, *c.params, *c.cap, 0.0, r.b_c, sc);
  CHECK(s.level[0].mean == j["mean"].get<double>());
  const Agreement a = assess(s, value_Vc(m, r, 0.0).value);
  CHECK(std::abs(j["mean"].get<double>() - r.vc_zero) <= 3.0 * j["stderr"].get<double>() + a.budget);
}

TEST_CASE("cmd_simulate is byte-deterministic and honours the seed") {
  RunConfig c = parse_config(kBase);
  c.simulate.b = 0.2;
  c.simulate.x0 = 0.1;
  const fs::path o1 = scratch("sim1"), o2 = scratch("sim2");
  const std::string a = cmd_simulate(c, o1), b = cmd_simulate(c, o2);
  CHECK(a == b);
  CHECK(slurp(o1 / "simulate.json") == slurp(o2 / "simulate.json"));
  c.sim.seed = 7;
  CHECK(cmd_simulate(c) != a);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("cli");
  {
    std::ofstream(dir / "good.json") << kBase;
    std::ofstream(dir / "bad.json") << R"({"mu":1,"sigma":1,"q":1,"beta":1.2,"cap":{"kind":"affine","coefficients":[0.5,0.5]},"numerics":{"grid":5}})";
    std::ofstream(dir / "coarse.json")
        << R"({"mu":1,"sigma":1,"q":1,"beta":1.2,"cap":{"kind":"affine","coefficients":[0.5,0.5]},"numerics":{"tol":0.01}})";
  }
  const std::string out = " --out " + (dir / "out").string();
  CHECK(run_cli("solve --config " + (dir / "good.json").string() + out) == 0);
  CHECK(run_cli("solve --config " + (dir / "bad.json").string() + out) == 2);
  CHECK(run_cli("sweep --config " + (dir / "good.json").string() + out + " --param beta --values 1.1,1.0,2") == 0);
  CHECK(run_cli("verify --no-sim --config " + (dir / "good.json").string() + out) == 0);
  CHECK(run_cli("verify --no-sim --config " + (dir / "coarse.json").string() + out) == 1);
  CHECK(run_cli("solve --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("simulate --seed 3 --config " + (dir / "good.json").string() + out) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "out" / "simulate.json"))["seed"] == 3);
  CHECK(run_cli("solve --config " + fs::path(DIVCAP_SOURCE_DIR "/configs/reference.json").string() + out) == 0);
}
