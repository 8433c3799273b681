#include <doctest.h>

#include <map>
#include <sstream>

#include <json.hpp>

#include "divcap/sim_kernels.hpp"
#include "divcap/sim_oracle.hpp"
#include "support.hpp"

using namespace divcap;
using namespace divcap::testing;

namespace {

SimConfig small(std::size_t n, double horizon = 0.0) {
  SimConfig c;
  c.n_paths = n;
  c.horizon = horizon;
  c.multilevel = false;
  return c;
}

KernelSpec kernel(const RateCap& cap, Boundary boundary, double b, double x0) {
  KernelSpec s;
  s.mu = 1.0;
  s.sigma = 1.0;
  s.q = 1.0;
  s.cap = &cap;
  s.b = b;
  s.x0 = x0;
  s.boundary = boundary;
  s.dt = 1e-3;
  s.n_steps = 2000;
  s.seed = 99;
  return s;
}

bool same(const std::vector<PathRecord>& a, const std::vector<PathRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].dividends != b[i].dividends || a[i].injections != b[i].injections || a[i].laplace != b[i].laplace ||
        a[i].survival != b[i].survival || a[i].steps != b[i].steps)
      return false;
  return true;
}

}  // namespace

TEST_CASE("parallel kernel is bit-identical to the serial reference") {
  const RateCap cap = affine(0.5, 0.5);
  for (Boundary bd : {Boundary::Absorb, Boundary::Reflect}) {
    for (bool ml : {false, true}) {
      for (bool anti : {false, true}) {
        KernelSpec s = kernel(cap, bd, 0.2, 0.3);
        s.multilevel = ml;
        s.antithetic = anti;
        s.bridge = bd == Boundary::Absorb && ml;
        const std::size_t n = anti ? 300 : 301;  // antithetic runs in pairs
        const auto ref = simulate_serial(s, n);
        for (int threads : {1, 2, 4}) CHECK(same(ref, simulate_parallel(s, n, threads)));
      }
    }
  }
}

TEST_CASE("seeded runs are deterministic and seeds matter") {
  const RateCap cap = affine(0.5, 0.5);
  KernelSpec s = kernel(cap, Boundary::Reflect, 0.1, 0.0);
  CHECK(same(simulate_parallel(s, 200), simulate_parallel(s, 200)));
  KernelSpec t = s;
  t.seed = 100;
  CHECK_FALSE(same(simulate_parallel(s, 200), simulate_parallel(t, 200)));
  CHECK(stream_seed(1, 2) != stream_seed(2, 1));
  CHECK(stream_seed(1, 2) == stream_seed(1, 2));
}

TEST_CASE("antithetic partners see mirrored increments") {
  const RateCap cap = constant(0.0);
  KernelSpec s = kernel(cap, Boundary::Absorb, 1e9, 100.0);
  s.mu = 0.0;
  s.n_steps = 400;
  std::map<std::pair<std::size_t, double>, double> st;
  simulate_serial(s, 6, [&](std::size_t p, double t, double x, double, double) { st[{p, t}] = x; }, 6);
  REQUIRE(st.size() == 6 * 400);
  for (std::size_t k = 0; k < 3; ++k)
    for (int n = 1; n <= 400; n += 37) {
      const double t = n * s.dt;
      REQUIRE(st[{2 * k, t}] - 100.0 == doctest::Approx(-(st[{2 * k + 1, t}] - 100.0)).epsilon(1e-9));
    }
}

TEST_CASE("refracted scheme: zero cap pays nothing, unreachable barrier pays nothing") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap zero = constant(0.0);
  for (const PathRecord& r : simulate_refracted(p, zero, 0.0, 0.5, small(200))) CHECK(r.dividends[0] == 0.0);
  const RateCap cap = affine(0.5, 0.5);
  const SimConfig c = small(200);
  const double H = resolved_horizon(c, 1.0);
  const double far = 1.0 * H + 10.0 * std::sqrt(H) + 1.0;
  for (const PathRecord& r : simulate_refracted(p, cap, far, 0.5, c)) CHECK(r.dividends[0] == 0.0);
}

TEST_CASE("reflected scheme: state stays nonnegative and injects only at zero") {
  const RateCap cap = affine(0.5, 0.5);
  KernelSpec s = kernel(cap, Boundary::Reflect, 0.12, 0.05);
  std::size_t injections = 0;
  simulate_serial(s, 50, [&](std::size_t, double, double x, double rate, double inj) {
    REQUIRE(x >= 0.0);
    REQUIRE(inj >= 0.0);
    if (inj > 0.0) {
      ++injections;
      REQUIRE(x == 0.0);
    }
    REQUIRE(rate >= 0.0);
  }, 50);
  CHECK(injections > 0);
}

TEST_CASE("constant cap: estimate_IF equals S/q up to the truncation tail") {
  const ModelParams p = params(1, 1, 1, 2);
  const double s = 0.8;
  const MCEstimate e = estimate_IF(p, constant(s), 0.4, small(1000));
  CHECK(std::abs(e.mean - s / p.q()) <= 3.0 * e.std_error + e.truncation_bound + 1e-12);
  CHECK(e.bracket_low <= s / p.q());
  CHECK(e.bracket_high >= s / p.q() - 1e-12);
}

TEST_CASE("exact values at the boundary") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  const MCEstimate jd = estimate_J_d(p, cap, 0.0, 0.3, small(100));
  CHECK(jd.mean == 0.0);
  CHECK(jd.std_error == 0.0);
  const MCEstimate lap = estimate_laplace_tau0(p, cap, 0.0, 0.3, small(100));
  CHECK(lap.mean == 1.0);
  CHECK_THROWS_AS(estimate_IF(p, cap, -0.1, small(100)), Error);
}

TEST_CASE("laplace transform of ruin decreases with the start level") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  double prev = 1.0, prev_se = 0.0;
  for (double x0 : {0.0, 0.1, 0.3, 0.6, 1.0}) {
    const MCEstimate e = estimate_laplace_tau0(p, cap, x0, 0.25, small(4000));
    CHECK(e.mean <= prev + 3.0 * (e.std_error + prev_se));
    prev = e.mean;
    prev_se = e.std_error;
  }
}

TEST_CASE("b_c beats other barriers in simulation") {
  const ModelParams p = params(1, 1, 1, 1.2);
  const RateCap cap = affine(0.5, 0.5);
  const Regime r = decide_regime(solve_model(p, cap));
  const SimConfig c = small(8000);
  const MCEstimate best = estimate_J_c(p, cap, 0.0, r.b_c, c);
  for (double b : {0.0, 0.6, 1.2}) {
    const MCEstimate other = estimate_J_c(p, cap, 0.0, b, c);
    CHECK(best.mean >= other.mean - 3.0 * (best.std_error + other.std_error));
  }
}

TEST_CASE("truncation handling") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  CHECK_THROWS_WITH_AS(estimate_IF(p, cap, 0.5, small(100, 1.0)), doctest::Contains("TruncationTooLoose"), Error);
  CHECK(truncation_bound(Functional::IF, p, cap, 0.5, 5.0) > truncation_bound(Functional::IF, p, cap, 0.5, 10.0));
  SimConfig c;
  CHECK(std::exp(-p.q() * resolved_horizon(c, p.q())) <= 1e-7 * (1 + 1e-12));
  CHECK(resolved_steps(c, p.q()) % 4 == 0);
}

TEST_CASE("refinement study agrees with the closed form at small scale") {
  const ModelParams p = params(1, 1, 1, 1.2);
  const RateCap cap = affine(0.5, 0.5);
  const ModelSolution m = solve_model(p, cap);
  const Regime r = decide_regime(m);
  SimConfig c;
  c.n_paths = 8000;
  const RefinementStudy s = refine(Functional::Jd, p, cap, r.b_d, r.b_d, c);
  CHECK(s.dt[1] == doctest::Approx(2 * s.dt[0]));
  const Agreement a = assess(s, J_d(m, r.cd, r.b_d).value);
  CHECK(a.pass);
}

TEST_CASE("estimate_json has stable keys and echoes the seed") {
  MCEstimate e;
  e.mean = 0.1;
  e.std_error = 0.01;
  e.n_effective = 10;
  const auto j = nlohmann::ordered_json::parse(estimate_json(e, 42));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"mean", "stderr", "n_effective", "truncation_bound", "bracket_low",
                                         "bracket_high", "seed"});
  CHECK(j["seed"] == 42);
  CHECK(j["mean"].get<double>() == 0.1);
}

TEST_CASE("dump_paths writes a header and one row per fine step") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  SimConfig c = small(10, 2.0);
  c.truncation_tol = 10.0;
  std::ostringstream os;
  dump_paths(p, cap, 0.1, 0.0, Boundary::Reflect, c, 3, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "path_id,t,state,rate,injection_increment");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3 * resolved_steps(c, 1.0));
}

TEST_CASE("domination: identical strategies give identical paths") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  SimConfig c = small(2, 4.0);
  const DominationReport r = domination_check(p, cap, {RateRule::Threshold, 0.2}, {InjectionRule::Reflect, 0.0},
                                              {RateRule::Threshold, 0.2}, 0.3, c, 500);
  CHECK(r.equal_rates);
  CHECK(r.identical_paths == r.paths);
  CHECK(r.state_violations == 0);
  CHECK(r.passed);
}

TEST_CASE("domination: full rate against zero rate, both reflected") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  const DominationReport r = domination_check(p, cap, {RateRule::Zero, 0.0}, {InjectionRule::Reflect, 0.0},
                                              {RateRule::Full, 0.0}, 0.2, small(2, 4.0), 1000);
  CHECK_FALSE(r.equal_rates);
  CHECK(r.steps_checked > 0);
  CHECK(r.state_violations == 0);
  CHECK(r.termination_mismatches == 0);
  CHECK(r.passed);
}

TEST_CASE("domination: lump injection against reflection at equal rates") {
  const ModelParams p = params(1, 1, 1, 2);
  const RateCap cap = affine(0.5, 0.5);
  for (double lump : {0.1, 1.0}) {
    const DominationReport r = domination_check(p, cap, {RateRule::Threshold, 0.3},
                                                {InjectionRule::LumpAtStart, lump}, {RateRule::Threshold, 0.3},
                                                0.0, small(2, 4.0), 1000);
    CHECK(r.equal_rates);
    CHECK(r.injection_violations == 0);
    CHECK(r.discounted_injection_violations == 0);
    CHECK(r.state_violations == 0);
    CHECK(r.passed);
  }
}
