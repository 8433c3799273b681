#include "divcap/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "divcap/csv.hpp"
#include "divcap/sim_oracle.hpp"

namespace divcap {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& dir, const char* name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + (dir / name).string());
  return out;
}

double value_grid_max(const RunConfig& cfg, const Regime& r, double x_max) {
  double hi = cfg.output.grid_max > 0.0 ? cfg.output.grid_max : std::max(5.0, 4.0 * std::max(r.b_d, r.b_c));
  return std::min(hi, x_max);
}

SolveReport make_report(const ModelSolution& m, const Regime& r) {
  SolveReport rep;
  rep.b_d = r.b_d;
  rep.b_c = r.b_c;
  rep.vd_prime_zero = r.vd_prime_zero;
  rep.vc_zero = r.vc_zero;
  rep.regime = r.kind;
  rep.x_max = m.x_max();
  rep.residual_phi = m.phi.residual_sup();
  rep.residual_IF = m.IF.residual_sup();
  return rep;
}

double relative(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

std::string report_json(const SolveReport& r) {
  ordered_json j;
  j["b_d"] = r.b_d;
  j["b_c"] = r.b_c;
  j["vd_prime_zero"] = r.vd_prime_zero;
  j["vc_zero"] = r.vc_zero;
  j["regime"] = std::string(to_string(r.regime));
  j["x_max"] = r.x_max;
  j["residual_phi"] = r.residual_phi;
  j["residual_IF"] = r.residual_IF;
  return j.dump(2) + "\n";
}

SolveReport cmd_solve(const RunConfig& cfg, const fs::path& out_dir) {
  const ModelSolution m = solve_model(*cfg.params, *cfg.cap, cfg.numerics);
  const Regime r = decide_regime(m);
  const SolveReport rep = make_report(m, r);
  if (out_dir.empty()) return rep;

  open_out(out_dir, "report.json") << report_json(rep);
  std::ofstream csv = open_out(out_dir, "value_grid.csv");
  write_row(csv, {"x", "V_d", "V_c", "V", "V_prime", "rate"});
  for (double x : linspace(0.0, value_grid_max(cfg, r, m.x_max()), cfg.output.grid_n)) {
    const Jet vd = value_Vd(m, r, x);
    const Jet vc = value_Vc(m, r, x);
    const Jet v = value_V(m, r, x);
    write_row(csv, {format_double(x), format_double(vd.value), format_double(vc.value),
                    format_double(v.value), format_double(v.d1), format_double(optimal_rate(m, r, x))});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// sweep

namespace {

// cap.<i> -> i, otherwise npos.
std::size_t cap_index(const std::string& name) {
  if (name.rfind("cap.", 0) != 0 || name.size() == 4) return std::string::npos;
  const std::string digits = name.substr(4);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::string::npos;
  return static_cast<std::size_t>(std::stoul(digits));
}

}  // namespace

bool is_sweep_param(const std::string& name) {
  return name == "mu" || name == "sigma" || name == "q" || name == "beta" ||
         cap_index(name) != std::string::npos;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::string& param,
                                const std::vector<double>& values, const fs::path& out_dir) {
  if (!is_sweep_param(param))
    throw Error(ErrorCode::ConfigError,
                "sweep parameter '" + param + "' is not one of mu, sigma, q, beta, cap.<i>");
  const std::size_t ci = cap_index(param);
  if (ci != std::string::npos && ci >= cfg.cap_spec.coefficients.size())
    throw Error(ErrorCode::ConfigError, "sweep parameter '" + param + "' indexes past cap.coefficients");
  if (values.empty()) throw Error(ErrorCode::ConfigError, "sweep needs at least one value");

  std::vector<SweepRow> rows(values.size());
  // Rows are independent; each solve is serial inside.
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < static_cast<long>(values.size()); ++i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    try {
      RunConfig c = cfg;
      if (param == "mu") c.raw.mu = row.value;
      else if (param == "sigma") c.raw.sigma = row.value;
      else if (param == "q") c.raw.q = row.value;
      else if (param == "beta") c.raw.beta = row.value;
      else c.cap_spec.coefficients[ci] = row.value;
      revalidate(c);
      row.report = cmd_solve(c);
    } catch (const Error& e) {
      row.error = std::string(to_string(e.code()));
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }

  if (!out_dir.empty()) {
    std::ofstream csv = open_out(out_dir, "sweep.csv");
    write_sweep_csv(param, rows, csv);
  }
  return rows;
}

void write_sweep_csv(const std::string& param, const std::vector<SweepRow>& rows, std::ostream& out) {
  write_row(out, {param, "b_d", "b_c", "vd_prime_zero", "vc_zero", "regime", "error"});
  for (const SweepRow& row : rows) {
    if (row.report) {
      const SolveReport& r = *row.report;
      write_row(out, {format_double(row.value), format_double(r.b_d), format_double(r.b_c),
                      format_double(r.vd_prime_zero), format_double(r.vc_zero), to_string(r.regime), ""});
    } else {
      write_row(out, {format_double(row.value), "nan", "nan", "nan", "nan", "error", row.error});
    }
  }
}

// ---------------------------------------------------------------------------
// verify

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "unknown";
}

bool VerifyReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

const CheckResult* VerifyReport::find(const std::string& name) const {
  for (const CheckResult& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

class Checks {
public:
  void le(std::string name, double value, double threshold, std::string detail = {}) {
    const bool ok = std::isfinite(value) && value <= threshold;
    out.push_back({std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, value, threshold,
                   std::move(detail)});
  }
  void skip(std::string name, std::string why) {
    out.push_back({std::move(name), CheckStatus::Skipped, 0.0, 0.0, std::move(why)});
  }
  void fail(std::string name, std::string why) {
    out.push_back({std::move(name), CheckStatus::Fail, std::nan(""), 0.0, std::move(why)});
  }
  std::vector<CheckResult> out;
};

std::string describe(const char* fmt_key, double v) {
  std::ostringstream os;
  os << fmt_key << '=' << format_double(v);
  return os.str();
}

void analytic_checks(const RunConfig& cfg, const ModelSolution& m, const Regime& r, Checks& ck) {
  const ModelParams& p = m.params;
  const double beta = p.beta();
  const double tol = cfg.numerics.residual_tol;

  ck.le("ode_residual_phi", m.phi.residual_sup(), tol);
  ck.le("ode_residual_IF", m.IF.residual_sup(), tol);
  ck.le("ode_boundary", std::max(m.phi.boundary_defect(), m.IF.boundary_defect()), tol);
  ck.le("far_field", m.phi.far_field_attenuation(), cfg.numerics.far_field_tol);

  // Smooth fit at the optimal barriers and at a generic probe barrier.
  const double probe = std::min(1.0, 0.5 * m.x_max());
  double fit_d = 0.0, fit_c = 0.0, slope0 = 0.0;
  for (double b : {r.b_d, r.b_c, probe}) {
    if (b > 0.0) {
      const BarrierCoeffsD cd = coeffs_d(m.phi, m.IF, m.kit, b);
      const Jet l = J_d(m, cd, b, Side::Left), rr = J_d(m, cd, b, Side::Right);
      fit_d = std::max(fit_d, std::abs(l.d1 - rr.d1) / (1.0 + std::abs(rr.d1)));
      const BarrierCoeffsC cc = coeffs_c(m.phi, m.IF, m.kit, beta, b);
      const Jet lc = J_c(m, cc, b, Side::Left), rc = J_c(m, cc, b, Side::Right);
      fit_c = std::max(fit_c, std::abs(lc.d1 - rc.d1) / (1.0 + std::abs(rc.d1)));
      slope0 = std::max(slope0, std::abs(J_c(m, cc, 0.0).d1 - beta));
    }
  }
  ck.le("smooth_fit_J_d", fit_d, 1e-8);
  ck.le("smooth_fit_J_c", fit_c, 1e-8);
  ck.le("J_c_slope_at_zero", slope0, 1e-8);

  if (r.b_d > 0.0) {
    ck.le("b_d_optimality", std::abs(J_d(m, r.cd, r.b_d).d1 - 1.0), 1e-7, describe("b_d", r.b_d));
  } else {
    ck.le("b_d_optimality", std::max(0.0, r.bd.condition - 1.0), 1e-8,
          describe("b_d=0 condition", r.bd.condition));
  }

  const SupercontactResiduals sc = supercontact_residuals(m, r.b_c);
  ck.le("supercontact_bc1", std::abs(sc.eq_bc1), 1e-7, describe("b_c", r.b_c));
  ck.le("supercontact_bc2", std::abs(sc.eq_bc2), 1e-7, describe("b_c", r.b_c));
  ck.le("second_derivative_jump", sc.second_jump, 1e-6);

  const double hi = value_grid_max(cfg, r, m.x_max());
  const std::vector<double> xs = linspace(0.0, hi, 1001);
  ck.le("hjb_V_d", hjb_residual(p, m.cap, [&](double x) { return value_Vd(m, r, x); }, xs), 1e-6);
  ck.le("hjb_V_c", hjb_residual(p, m.cap, [&](double x) { return value_Vc(m, r, x); }, xs), 1e-6);

  std::vector<double> vc(xs.size());
  double grad_excess = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Jet j = value_Vc(m, r, xs[i]);
    vc[i] = j.value;
    grad_excess = std::max({grad_excess, -j.d1, j.d1 - beta});
  }
  double second = -INFINITY;
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) second = std::max(second, vc[i - 1] - 2.0 * vc[i] + vc[i + 1]);
  ck.le("concavity_V_c", second, 1e-8);
  ck.le("gradient_bounds_V_c", grad_excess, 1e-9);
  ck.le("V_c_slope_at_zero", std::abs(value_Vc(m, r, 0.0).d1 - beta), 1e-7);
  ck.le("V_c_slope_at_b_c", std::abs(value_Vc(m, r, r.b_c).d1 - 1.0), 1e-7);

  const GrowthBound g = growth_bound(m, r);
  double growth_excess = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    growth_excess = std::max(growth_excess, vc[i] - (g.C + g.A * xs[i]));
  ck.le("growth_bound", growth_excess, 1e-12);

  // Both discriminants must point the same way unless one sits in its tie band.
  const double dd = r.vd_prime_zero - beta;
  const bool tie = std::abs(dd) <= r.tie_band || std::abs(r.vc_zero) <= r.vc_tie_band;
  const bool agree = tie || ((dd > 0.0) == (r.vc_zero > 0.0));
  ck.le("regime_consistency", agree ? 0.0 : 1.0, 0.0,
        std::string(to_string(r.kind)) + " " + describe("vd_prime_zero-beta", dd) + " " +
            describe("vc_zero", r.vc_zero));

  double shift = 0.0;
  for (double lambda : {-1.0, 2.0}) {
    ModelSolution ms = m;
    ms.IF = m.IF.shifted(lambda, m.phi);
    const BdResult bd = find_b_d(ms.phi, ms.IF, ms.kit);
    shift = std::max(shift, relative(bd.b, r.b_d));
    const BarrierCoeffsD c0 = coeffs_d(m.phi, m.IF, m.kit, r.b_d);
    const BarrierCoeffsD c1 = coeffs_d(ms.phi, ms.IF, ms.kit, r.b_d);
    for (double x : linspace(0.0, std::min(hi, 0.9 * m.x_max()), 41))
      shift = std::max(shift, relative(J_d(ms, c1, x).value, J_d(m, c0, x).value));
  }
  ck.le("lambda_shift_invariance", shift, 1e-9);
}

void sim_checks(const RunConfig& cfg, const ModelSolution& m, const Regime& r, Checks& ck) {
  const ModelParams& p = m.params;
  SimConfig sc = cfg.sim;
  sc.multilevel = true;
  const double b_lap = r.b_d > 0.0 ? r.b_d : r.b_c;
  struct Item {
    Functional f;
    double b;
  };
  for (const Item& it : {Item{Functional::Jd, r.b_d}, Item{Functional::Jc, r.b_c},
                         Item{Functional::IF, r.b_c}, Item{Functional::LaplaceTau0, b_lap}}) {
    const double scale = it.b > 0.0 ? it.b : 1.0;
    for (double k : cfg.verify.mc_points) {
      const double x = k * scale;
      std::ostringstream name;
      name << "mc_" << to_string(it.f) << "_x" << format_double(x);
      try {
        double closed = 0.0;
        switch (it.f) {
          case Functional::Jd: closed = J_d(m, coeffs_d(m.phi, m.IF, m.kit, it.b), x).value; break;
          case Functional::Jc: closed = J_c(m, coeffs_c(m.phi, m.IF, m.kit, p.beta(), it.b), x).value; break;
          case Functional::IF: closed = m.IF.eval(x).value; break;
          case Functional::LaplaceTau0: closed = first_passage_h(x, it.b, m.kit, m.phi); break;
        }
        const RefinementStudy s = refine(it.f, p, m.cap, x, it.b, sc);
        const Agreement a = assess(s, closed);
        std::ostringstream d;
        d << "closed=" << format_double(closed) << " mc=" << format_double(s.level[0].mean)
          << " se=" << format_double(s.level[0].std_error) << " budget=" << format_double(a.budget)
          << (a.shrinks ? "" : " bias does not shrink");
        ck.out.push_back({name.str(), a.pass ? CheckStatus::Pass : CheckStatus::Fail, std::abs(a.error[0]),
                          a.allowed, d.str()});
      } catch (const Error& e) {
        ck.fail(name.str(), e.what());
      }
    }
  }

  const double b = r.b_c;
  const std::size_t n = cfg.verify.domination_paths;
  const DominationReport up = domination_check(p, m.cap, {RateRule::Threshold, b}, {InjectionRule::Reflect, 0.0},
                                               {RateRule::Full, 0.0}, b, sc, n);
  ck.le("domination_higher_rate",
        static_cast<double>(up.state_violations + up.termination_mismatches), 0.0,
        "paths=" + std::to_string(up.paths) + " steps=" + std::to_string(up.steps_checked));
  const DominationReport eq = domination_check(p, m.cap, {RateRule::Threshold, b}, {InjectionRule::LumpAtStart, 0.25},
                                               {RateRule::Threshold, b}, b, sc, n);
  ck.le("domination_equal_rate",
        static_cast<double>(eq.state_violations + eq.termination_mismatches + eq.injection_violations +
                            eq.discounted_injection_violations),
        0.0, "paths=" + std::to_string(eq.paths) + " steps=" + std::to_string(eq.steps_checked));
}

}  // namespace

VerifyReport cmd_verify(const RunConfig& cfg, bool run_sim, const fs::path& out_dir) {
  Checks ck;
  const ModelSolution m = solve_model(*cfg.params, *cfg.cap, cfg.numerics);
  const Regime r = decide_regime(m);
  analytic_checks(cfg, m, r, ck);
  if (run_sim) {
    sim_checks(cfg, m, r, ck);
  } else {
    for (const char* name : {"mc_J_d", "mc_J_c", "mc_I_F", "mc_laplace_tau0", "domination_higher_rate",
                             "domination_equal_rate"})
      ck.skip(name, "simulation disabled");
  }
  VerifyReport rep{std::move(ck.out)};
  if (!out_dir.empty()) open_out(out_dir, "verify.json") << verify_json(rep);
  return rep;
}

std::string verify_json(const VerifyReport& r) {
  ordered_json checks = ordered_json::array();
  for (const CheckResult& c : r.checks) {
    ordered_json j;
    j["name"] = c.name;
    j["status"] = std::string(to_string(c.status));
    j["value"] = c.value;
    j["threshold"] = c.threshold;
    j["detail"] = c.detail;
    checks.push_back(std::move(j));
  }
  ordered_json root;
  root["passed"] = r.passed();
  root["checks"] = std::move(checks);
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// simulate

std::string cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  const ModelParams& p = *cfg.params;
  const RateCap& cap = *cfg.cap;
  const SimulateOptions& so = cfg.simulate;
  const bool reflected = so.strategy == Boundary::Reflect;

  double b = 0.0;
  if (so.b) {
    b = *so.b;
  } else {
    const ModelSolution m = solve_model(p, cap, cfg.numerics);
    const Regime r = decide_regime(m);
    b = reflected ? r.b_c : r.b_d;
  }

  const MCEstimate e =
      reflected ? estimate_J_c(p, cap, so.x0, b, cfg.sim) : estimate_J_d(p, cap, so.x0, b, cfg.sim);

  ordered_json j;
  j["strategy"] = reflected ? "reflected" : "refracted";
  j["b"] = b;
  j["x0"] = so.x0;
  j["dt"] = cfg.sim.dt;
  j["horizon"] = resolved_horizon(cfg.sim, p.q());
  j["n_paths"] = cfg.sim.n_paths;
  const ordered_json est = ordered_json::parse(estimate_json(e, cfg.sim.seed));
  for (const auto& [k, v] : est.items()) j[k] = v;
  const std::string text = j.dump(2) + "\n";

  if (!out_dir.empty()) {
    open_out(out_dir, "simulate.json") << text;
    if (so.dump_paths > 0) {
      std::ofstream csv = open_out(out_dir, "paths.csv");
      dump_paths(p, cap, b, so.x0, so.strategy, cfg.sim, so.dump_paths, csv);
    }
  }
  return text;
}

}  // namespace divcap
