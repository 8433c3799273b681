#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "divcap/commands.hpp"
#include "divcap/csv.hpp"

namespace {

constexpr const char* kConfigHelp = R"(Config file (JSON, comments allowed). Keys and defaults:
  mu, sigma, q, beta                 required; sigma > 0, q > 0, beta > 1
  cap.kind                           constant | linear | affine | tabulated
  cap.coefficients                   {S} | {K} | {c0, c1} | {x0, y0, x1, y1, ...}
  numerics.x_max        0            0 = smallest x >= 20 with exp(int theta2) < 1e-10 (20 for caps still growing at 1e4)
  numerics.tol          1e-8         ODE tolerance (integrator runs at tol * 1e-5)
  numerics.residual_tol 1e-7         pass limit of the ODE residual checks
  numerics.grid_n       4001         nodes of the sinh-stretched grid
  numerics.far_field_tol 1e-6        limit on exp(-int (theta1 - theta2))
  sim.dt                1e-3
  sim.horizon           0            0 = ln(1e7)/q
  sim.n_paths           200000
  sim.seed              20240601
  sim.antithetic        true
  sim.bridge            false        Brownian-bridge ruin weight for refracted runs
  sim.multilevel        true         verify also runs 2 dt and 4 dt on the same normals
  sim.truncation_tol    1e-4         fail when the horizon tail bound exceeds this
  sim.threads           0            0 = OpenMP default
  simulate.strategy     "reflected"  reflected (J_c) | refracted (J_d)
  simulate.b            "optimal"    barrier, or "optimal" for b_c / b_d
  simulate.x0           0
  simulate.dump_paths   0            write paths.csv for the first n paths
  sweep.param, sweep.values          used when --param/--values are absent
  verify.mc_points      [0.5, 1]     Monte Carlo points as multiples of the barrier
  verify.domination_paths 10000
  output.grid_n         401          rows of value_grid.csv
  output.grid_max       0            0 = max(5, 4 max(b_d, b_c)) clipped to x_max
Exit codes: 0 success, 1 verification failure, 2 configuration error, 3 solver error.)";

int run(int argc, char** argv) {
  CLI::App app{"Optimal dividends under a rate cap with capital injection"};
  app.footer(kConfigHelp);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string param;
  std::vector<double> values;
  bool no_sim = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Overrides sim.seed");
  };
  CLI::App* solve = app.add_subcommand("solve", "Barriers, regime and value grid (report.json, value_grid.csv)");
  CLI::App* sweep = app.add_subcommand("sweep", "One solve per parameter value (sweep.csv)");
  CLI::App* verify = app.add_subcommand("verify", "Invariant suite (verify.json); exit 1 on failure");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of a barrier strategy (simulate.json)");
  for (CLI::App* sub : {solve, sweep, verify, simulate}) add_common(sub);
  sweep->add_option("--param", param, "mu, sigma, q, beta or cap.<i>");
  sweep->add_option("--values", values, "Values of --param")->delimiter(',');
  verify->add_flag("--no-sim", no_sim, "Analytic checks only; Monte Carlo items are skipped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  divcap::RunConfig cfg = divcap::load_config(config_path);
  for (CLI::App* sub : {solve, sweep, verify, simulate})
    if (sub->count("--seed")) cfg.sim.seed = seed;

  if (solve->parsed()) {
    std::cout << divcap::report_json(divcap::cmd_solve(cfg, out_dir));
    return 0;
  }
  if (sweep->parsed()) {
    if (param.empty()) param = cfg.sweep.param;
    if (values.empty()) values = cfg.sweep.values;
    if (param.empty()) throw divcap::Error(divcap::ErrorCode::ConfigError, "sweep needs --param or sweep.param");
    const auto rows = divcap::cmd_sweep(cfg, param, values, out_dir);
    divcap::write_sweep_csv(param, rows, std::cout);
    return 0;
  }
  if (verify->parsed()) {
    const divcap::VerifyReport rep = divcap::cmd_verify(cfg, !no_sim, out_dir);
    for (const auto& c : rep.checks) {
      std::cout << divcap::to_string(c.status) << ' ' << c.name;
      if (c.status != divcap::CheckStatus::Skipped)
        std::cout << " value=" << divcap::format_double(c.value) << " limit=" << divcap::format_double(c.threshold);
      if (!c.detail.empty()) std::cout << ' ' << c.detail;
      std::cout << '\n';
    }
    std::cout << (rep.passed() ? "verify: all checks passed\n" : "verify: FAILED\n");
    return rep.passed() ? 0 : 1;
  }
  std::cout << divcap::cmd_simulate(cfg, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const divcap::Error& e) {
    std::cerr << "divcap: " << e.what() << '\n';
    return divcap::is_config_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "divcap: " << e.what() << '\n';
    return 3;
  }
}
