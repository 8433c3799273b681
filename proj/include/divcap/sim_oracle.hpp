#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "divcap/core_model.hpp"
#include "divcap/sim_kernels.hpp"

namespace divcap {

struct SimConfig {
  double dt = 1e-3;
  double horizon = 0.0;  // 0: smallest H with exp(-q H) <= 1e-7
  std::size_t n_paths = 200000;
  std::uint64_t seed = 20240601;
  bool antithetic = true;
  bool bridge = false;
  bool multilevel = true;
  double truncation_tol = 1e-4;
  int threads = 0;  // 0: OpenMP default
};

double resolved_horizon(const SimConfig& cfg, double q);
/// Fine step count for cfg: ceil(H / dt) rounded up to a multiple of 4.
std::size_t resolved_steps(const SimConfig& cfg, double q);

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n_effective)
  std::size_t n_effective = 0;
  double truncation_bound = 0.0;
  // Range the infinite-horizon quantity is known to lie in, up to MC error.
  double bracket_low = 0.0;
  double bracket_high = 0.0;
};

enum class Functional { Jd, Jc, IF, LaplaceTau0 };
std::string to_string(Functional f);

/// Estimates at dt, 2 dt, 4 dt from the same Brownian increments.
struct RefinementStudy {
  std::array<double, kLevels> dt{};
  std::array<MCEstimate, kLevels> level{};
  std::array<double, kLevels - 1> diff{};     // level[l] - level[l+1], paired per path
  std::array<double, kLevels - 1> diff_se{};
  // Bias of level[0] from the fit e(h) = c sqrt(h) + d h to the paired
  // differences, with its standard error.
  double bias = 0.0;
  double bias_se = 0.0;
};

/// Raw per-path output of the refracted (absorbed at 0) scheme.
std::vector<PathRecord> simulate_refracted(const ModelParams& params, const RateCap& cap, double b,
                                           double x0, const SimConfig& cfg);
/// Raw per-path output of the reflected scheme.
std::vector<PathRecord> simulate_reflected(const ModelParams& params, const RateCap& cap, double b,
                                           double x0, const SimConfig& cfg);

/// Analytic bound on what the functional loses beyond the horizon.
double truncation_bound(Functional f, const ModelParams& params, const RateCap& cap, double x0,
                        double horizon);

RefinementStudy refine(Functional f, const ModelParams& params, const RateCap& cap, double x0,
                       double b, const SimConfig& cfg);

MCEstimate estimate_J_d(const ModelParams& params, const RateCap& cap, double x0, double b,
                        const SimConfig& cfg);
MCEstimate estimate_J_c(const ModelParams& params, const RateCap& cap, double x0, double b,
                        const SimConfig& cfg);
MCEstimate estimate_IF(const ModelParams& params, const RateCap& cap, double x0, const SimConfig& cfg);
MCEstimate estimate_laplace_tau0(const ModelParams& params, const RateCap& cap, double x0, double b,
                                 const SimConfig& cfg);

/// Closed form vs refinement study.
///   budget = |bias| + 3 se(bias), the fitted dt bias of the finest level
///   agree  = |e(h)| <= 3 se(h) + budget
///   shrink (only when |e(4h)| > 3 se(4h)): |e(2h)| <= |e(4h)| + 3 se_pair and |e(h)| <= |e(2h)| + 3 se_pair
struct Agreement {
  double closed = 0.0;
  std::array<double, kLevels> error{};
  double budget = 0.0;
  double allowed = 0.0;
  bool within = false;
  bool bias_resolved = false;
  bool shrinks = true;
  bool pass = false;
};
Agreement assess(const RefinementStudy& s, double closed);

/// JSON object text for an estimate (stable key order, round-trip numbers).
std::string estimate_json(const MCEstimate& e, std::uint64_t seed);

/// Writes path_id,t,state,rate,injection_increment for the first n paths at the fine level.
void dump_paths(const ModelParams& params, const RateCap& cap, double b, double x0, Boundary boundary,
                const SimConfig& cfg, std::size_t n, std::ostream& out);

// ---------------------------------------------------------------------------
// Pathwise domination harness

enum class RateRule { Zero, Full, Threshold, Constant };
struct RateSpec {
  RateRule rule = RateRule::Zero;
  double level = 0.0;  // Threshold: b. Constant: c, capped by F(x).
};

enum class InjectionRule { None, Reflect, LumpAtStart, Floor };
struct InjectionSpec {
  InjectionRule rule = InjectionRule::None;
  double amount = 0.0;  // LumpAtStart: size. Floor: level pushed back to.
};

struct DominationReport {
  std::size_t paths = 0;
  std::size_t steps_checked = 0;
  std::size_t state_violations = 0;
  std::size_t termination_mismatches = 0;
  std::size_t injection_violations = 0;             // cumulative, equal rates only
  std::size_t discounted_injection_violations = 0;  // equal rates only
  std::size_t identical_paths = 0;
  bool equal_rates = false;
  bool passed = false;
};

/// The original strategy (rate, injections) against the dominating one that
/// pays max(rule(own state), original rate) and reflects at 0 until the
/// original is ruined. Both see the same normals.
DominationReport domination_check(const ModelParams& params, const RateCap& cap, const RateSpec& original,
                                  const InjectionSpec& original_injection, const RateSpec& dominating,
                                  double x0, const SimConfig& cfg, std::size_t n_paths);

}  // namespace divcap
