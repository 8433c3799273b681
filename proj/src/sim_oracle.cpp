#include "divcap/sim_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <omp.h>
#include <json.hpp>

#include "divcap/csv.hpp"

namespace divcap {

double resolved_horizon(const SimConfig& cfg, double q) {
  if (cfg.horizon > 0.0) return cfg.horizon;
  return std::log(1e7) / q;
}

std::size_t resolved_steps(const SimConfig& cfg, double q) {
  const double h = resolved_horizon(cfg, q);
  auto n = static_cast<std::size_t>(std::ceil(h / cfg.dt - 1e-9));
  return std::max<std::size_t>(4, (n + 3) / 4 * 4);
}

std::string to_string(Functional f) {
  switch (f) {
    case Functional::Jd: return "J_d";
    case Functional::Jc: return "J_c";
    case Functional::IF: return "I_F";
    case Functional::LaplaceTau0: return "laplace_tau0";
  }
  return "unknown";
}

namespace {

void check_cfg(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorCode::ConfigError, "sim.dt must be > 0");
  if (cfg.horizon < 0.0 || !std::isfinite(cfg.horizon))
    throw Error(ErrorCode::ConfigError, "sim.horizon must be >= 0 (0 = automatic)");
  if (cfg.n_paths < 2) throw Error(ErrorCode::ConfigError, "sim.n_paths must be >= 2");
}

KernelSpec make_spec(const ModelParams& p, const RateCap& cap, double b, double x0, Boundary bd,
                     const SimConfig& cfg) {
  check_cfg(cfg);
  KernelSpec s;
  s.mu = p.mu();
  s.sigma = p.sigma();
  s.q = p.q();
  s.cap = &cap;
  s.b = b;
  s.x0 = x0;
  s.boundary = bd;
  s.dt = cfg.dt;
  s.n_steps = resolved_steps(cfg, p.q());
  s.multilevel = cfg.multilevel;
  s.bridge = cfg.bridge && bd == Boundary::Absorb;
  s.seed = cfg.seed;
  s.antithetic = cfg.antithetic;
  return s;
}

std::size_t even_paths(const SimConfig& cfg) {
  return cfg.antithetic ? cfg.n_paths / 2 * 2 : cfg.n_paths;
}

struct Moments {
  double mean = 0.0, se = 0.0;
};

// Mean and standard error over samples summed in index order.
Moments moments(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += x;
  const double mean = s / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double rate_envelope(const RateCap& cap, const ModelParams& p, double x0, double t) {
  const CapValue f0 = cap.eval(0.0);
  return f0.value + f0.deriv * (x0 + std::abs(p.mu()) * t + 2.0 * p.sigma() * std::sqrt(t));
}

}  // namespace

std::vector<PathRecord> simulate_refracted(const ModelParams& params, const RateCap& cap, double b,
                                           double x0, const SimConfig& cfg) {
  return simulate_parallel(make_spec(params, cap, b, x0, Boundary::Absorb, cfg), even_paths(cfg),
                           cfg.threads);
}

std::vector<PathRecord> simulate_reflected(const ModelParams& params, const RateCap& cap, double b,
                                           double x0, const SimConfig& cfg) {
  return simulate_parallel(make_spec(params, cap, b, x0, Boundary::Reflect, cfg), even_paths(cfg),
                           cfg.threads);
}

double truncation_bound(Functional f, const ModelParams& p, const RateCap& cap, double x0, double H) {
  const double q = p.q();
  const double tail = std::exp(-q * H);
  if (f == Functional::LaplaceTau0) return tail;
  // E F(X_t) <= F(0) + F'(0) (x0 + |mu| t + 2 sigma sqrt t), integrated against e^{-qt} on [H, inf).
  const double fp0 = cap.eval(0.0).deriv;
  const double div = tail * (rate_envelope(cap, p, x0, H) / q + fp0 * std::abs(p.mu()) / (q * q) +
                             fp0 * p.sigma() / (q * q * std::sqrt(H)));
  if (f != Functional::Jc) return div;
  // Pushes at 0 come at most at the drift deficit plus the local-time rate.
  const double inj = tail * ((std::abs(p.mu()) + rate_envelope(cap, p, x0, H)) / q +
                             p.sigma() / (q * std::sqrt(H)));
  return div + p.beta() * inj;
}

RefinementStudy refine(Functional f, const ModelParams& params, const RateCap& cap, double x0, double b,
                       const SimConfig& cfg) {
  check_cfg(cfg);
  const double H = resolved_horizon(cfg, params.q());
  const double bound = truncation_bound(f, params, cap, x0, H);
  if (bound > cfg.truncation_tol) {
    std::ostringstream os;
    os << "horizon " << H << " leaves a tail of up to " << bound << " > " << cfg.truncation_tol;
    throw Error(ErrorCode::TruncationTooLoose, os.str());
  }
  if (x0 < 0.0) throw Error(ErrorCode::NegativeArgument, "x0 must be >= 0");

  const bool reflect = f == Functional::Jc || f == Functional::IF;
  const double barrier = f == Functional::IF ? 0.0 : b;
  const std::vector<PathRecord> recs =
      reflect ? simulate_reflected(params, cap, barrier, x0, cfg)
              : simulate_refracted(params, cap, barrier, x0, cfg);

  const std::size_t group = cfg.antithetic ? 2 : 1;
  const std::size_t units = recs.size() / group;
  const std::size_t levels = cfg.multilevel ? kLevels : 1;
  const double beta = params.beta();
  const double tail = std::exp(-params.q() * static_cast<double>(resolved_steps(cfg, params.q())) * cfg.dt);

  auto payoff = [&](const PathRecord& r, std::size_t l) {
    switch (f) {
      case Functional::Jd:
      case Functional::IF: return r.dividends[l];
      case Functional::Jc: return r.dividends[l] - beta * r.injections[l];
      case Functional::LaplaceTau0: return r.laplace[l];
    }
    return 0.0;
  };

  RefinementStudy s;
  std::array<std::vector<double>, kLevels> samples;
  std::array<double, kLevels> surv{};
  for (std::size_t l = 0; l < levels; ++l) {
    samples[l].resize(units);
    for (std::size_t u = 0; u < units; ++u) {
      double acc = 0.0;
      for (std::size_t k = 0; k < group; ++k) {
        acc += payoff(recs[u * group + k], l);
        surv[l] += recs[u * group + k].survival[l];
      }
      samples[l][u] = acc / static_cast<double>(group);
    }
    const Moments m = moments(samples[l]);
    MCEstimate& e = s.level[l];
    e.mean = m.mean;
    e.std_error = m.se;
    e.n_effective = units;
    e.truncation_bound = bound;
    if (f == Functional::LaplaceTau0) {
      // Paths alive at the horizon would be hit later, contributing at most e^{-qH}.
      e.bracket_low = e.mean;
      e.bracket_high = e.mean + tail * surv[l] / static_cast<double>(recs.size());
    } else {
      e.bracket_low = e.mean - bound;
      e.bracket_high = e.mean + bound;
    }
    s.dt[l] = cfg.dt * static_cast<double>(1u << l);
  }
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    std::vector<double> d(units);
    for (std::size_t u = 0; u < units; ++u) d[u] = samples[l][u] - samples[l + 1][u];
    const Moments m = moments(d);
    s.diff[l] = m.mean;
    s.diff_se[l] = m.se;
  }
  if (levels == kLevels) {
    // Fit e(h) = c sqrt(h) + d h through the two paired differences; the
    // fitted e(h) is a fixed linear combination of the three level samples.
    const double r2 = std::sqrt(2.0);
    std::vector<double> e(units);
    for (std::size_t u = 0; u < units; ++u) {
      const double d1 = samples[1][u] - samples[0][u];
      const double d2 = samples[2][u] - samples[1][u];
      const double v = (d2 - r2 * d1) / (2.0 - r2);
      e[u] = (r2 + 1.0) * d1 - r2 * v;
    }
    const Moments m = moments(e);
    s.bias = m.mean;
    s.bias_se = m.se;
  }
  return s;
}

MCEstimate estimate_J_d(const ModelParams& params, const RateCap& cap, double x0, double b,
                        const SimConfig& cfg) {
  SimConfig c = cfg;
  c.multilevel = false;
  return refine(Functional::Jd, params, cap, x0, b, c).level[0];
}

MCEstimate estimate_J_c(const ModelParams& params, const RateCap& cap, double x0, double b,
                        const SimConfig& cfg) {
  SimConfig c = cfg;
  c.multilevel = false;
  return refine(Functional::Jc, params, cap, x0, b, c).level[0];
}

MCEstimate estimate_IF(const ModelParams& params, const RateCap& cap, double x0, const SimConfig& cfg) {
  SimConfig c = cfg;
  c.multilevel = false;
  return refine(Functional::IF, params, cap, x0, 0.0, c).level[0];
}

MCEstimate estimate_laplace_tau0(const ModelParams& params, const RateCap& cap, double x0, double b,
                                 const SimConfig& cfg) {
  SimConfig c = cfg;
  c.multilevel = false;
  return refine(Functional::LaplaceTau0, params, cap, x0, b, c).level[0];
}

Agreement assess(const RefinementStudy& s, double closed) {
  Agreement a;
  a.closed = closed;
  for (std::size_t l = 0; l < kLevels; ++l) a.error[l] = s.level[l].mean - closed;
  a.budget = std::abs(s.bias) + 3.0 * s.bias_se;
  a.allowed = 3.0 * s.level[0].std_error + a.budget;
  a.within = std::abs(a.error[0]) <= a.allowed;
  a.bias_resolved = std::abs(a.error[2]) > 3.0 * s.level[2].std_error;
  if (a.bias_resolved) {
    a.shrinks = std::abs(a.error[1]) <= std::abs(a.error[2]) + 3.0 * s.diff_se[1] &&
                std::abs(a.error[0]) <= std::abs(a.error[1]) + 3.0 * s.diff_se[0];
  }
  a.pass = a.within && a.shrinks;
  return a;
}

std::string estimate_json(const MCEstimate& e, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["mean"] = e.mean;
  j["stderr"] = e.std_error;
  j["n_effective"] = e.n_effective;
  j["truncation_bound"] = e.truncation_bound;
  j["bracket_low"] = e.bracket_low;
  j["bracket_high"] = e.bracket_high;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

void dump_paths(const ModelParams& params, const RateCap& cap, double b, double x0, Boundary boundary,
                const SimConfig& cfg, std::size_t n, std::ostream& out) {
  KernelSpec spec = make_spec(params, cap, b, x0, boundary, cfg);
  spec.multilevel = false;
  std::size_t paths = std::max<std::size_t>(n, 2);
  if (spec.antithetic && paths % 2) ++paths;
  out << "path_id,t,state,rate,injection_increment\n";
  simulate_serial(
      spec, paths,
      [&](std::size_t id, double t, double x, double rate, double inj) {
        if (id >= n) return;
        out << id << ',' << format_double(t) << ',' << format_double(x) << ',' << format_double(rate)
            << ',' << format_double(inj) << '\n';
      },
      n);
}

// ---------------------------------------------------------------------------

namespace {

double apply_rule(const RateSpec& r, const RateCap& cap, double x) {
  if (x < 0.0) return 0.0;
  switch (r.rule) {
    case RateRule::Zero: return 0.0;
    case RateRule::Full: return cap.value(x);
    case RateRule::Threshold: return x >= r.level ? cap.value(x) : 0.0;
    case RateRule::Constant: return std::min(r.level, cap.value(x));
  }
  return 0.0;
}

bool same_spec(const RateSpec& a, const RateSpec& b) {
  return a.rule == b.rule && (a.rule == RateRule::Zero || a.rule == RateRule::Full || a.level == b.level);
}

struct PathDom {
  std::size_t steps = 0, state = 0, term = 0, inj = 0, dinj = 0;
  bool identical = true;
};

}  // namespace

DominationReport domination_check(const ModelParams& params, const RateCap& cap, const RateSpec& original,
                                  const InjectionSpec& original_injection, const RateSpec& dominating,
                                  double x0, const SimConfig& cfg, std::size_t n_paths) {
  check_cfg(cfg);
  if (x0 < 0.0) throw Error(ErrorCode::NegativeArgument, "x0 must be >= 0");
  const std::size_t n_steps = resolved_steps(cfg, params.q());
  const double h = cfg.dt, sq = std::sqrt(h), mu = params.mu(), sigma = params.sigma();
  const double step_disc = std::exp(-params.q() * h);
  const bool equal = same_spec(original, dominating);
  const double tol = 1e-12;

  std::vector<PathDom> res(n_paths);
#pragma omp parallel for schedule(dynamic, 16) num_threads(cfg.threads > 0 ? cfg.threads : omp_get_max_threads())
  for (long i = 0; i < static_cast<long>(n_paths); ++i) {
    boost::random::mt19937_64 eng(stream_seed(cfg.seed ^ 0xD0D0D0D0ULL, static_cast<std::uint64_t>(i)));
    boost::random::normal_distribution<double> normal;
    PathDom& pd = res[i];

    double x = x0, xt = x0;  // original, dominating
    double G = 0.0, Gt = 0.0, dG = 0.0, dGt = 0.0, disc = 1.0;
    if (original_injection.rule == InjectionRule::LumpAtStart) {
      x += original_injection.amount;
      G = dG = original_injection.amount;
    }
    bool ruined = x < 0.0, ruined_t = false;
    std::size_t ruin_step = ruined ? 0 : n_steps + 1, ruin_step_t = n_steps + 1;
    if (ruined) {
      ruined_t = xt < 0.0;
      ruin_step_t = ruined_t ? 0 : n_steps + 1;
    }
    for (std::size_t n = 0; n < n_steps && !ruined; ++n) {
      const double z = normal(eng);
      const double l = apply_rule(original, cap, x);
      const double lt = std::max(apply_rule(dominating, cap, xt), l);
      if (lt != l) pd.identical = false;
      const double y = x + (mu - l) * h + sigma * sq * z;
      const double yt = xt + (mu - lt) * h + sigma * sq * z;
      const double end_disc = disc * step_disc;

      double push = 0.0;
      switch (original_injection.rule) {
        case InjectionRule::Reflect: push = std::max(0.0, -y); break;
        case InjectionRule::Floor: push = std::max(0.0, original_injection.amount - y); break;
        default: break;
      }
      x = y + push;
      G += push;
      dG += end_disc * push;
      ruined = x < 0.0;

      // The dominating strategy reflects only while the original is alive.
      double push_t = 0.0;
      if (!ruined) push_t = std::max(0.0, -yt);
      xt = yt + push_t;
      Gt += push_t;
      dGt += end_disc * push_t;
      ruined_t = xt < 0.0;
      disc = end_disc;

      ++pd.steps;
      if (xt > x) ++pd.state;
      if (xt != x) pd.identical = false;
      if (ruined) ruin_step = n;
      if (ruined_t && ruin_step_t > n_steps) ruin_step_t = n;
      if (ruined_t && !ruined) break;
      if (equal) {
        if (Gt > G + tol * (1.0 + G)) ++pd.inj;
        if (dGt > dG + tol * (1.0 + dG)) ++pd.dinj;
      }
    }
    if (ruin_step != ruin_step_t) ++pd.term;
  }

  DominationReport rep;
  rep.paths = n_paths;
  rep.equal_rates = equal;
  for (const PathDom& pd : res) {
    rep.steps_checked += pd.steps;
    rep.state_violations += pd.state;
    rep.termination_mismatches += pd.term;
    rep.injection_violations += pd.inj;
    rep.discounted_injection_violations += pd.dinj;
    rep.identical_paths += pd.identical;
  }
  rep.passed = rep.state_violations == 0 && rep.termination_mismatches == 0 &&
               rep.injection_violations == 0 && rep.discounted_injection_violations == 0;
  return rep;
}

}  // namespace divcap
