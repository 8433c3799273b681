#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "divcap/barrier_solver.hpp"
#include "divcap/config.hpp"

namespace divcap {

struct SolveReport {
  double b_d = 0.0;
  double b_c = 0.0;
  double vd_prime_zero = 0.0;
  double vc_zero = 0.0;
  RegimeKind regime = RegimeKind::NoInjection;
  double x_max = 0.0;
  double residual_phi = 0.0;
  double residual_IF = 0.0;
};

/// Solves the model of cfg. Writes report.json and value_grid.csv
/// (x,V_d,V_c,V,V_prime,rate) into out_dir when it is non-empty.
SolveReport cmd_solve(const RunConfig& cfg, const std::filesystem::path& out_dir = {});

/// Report fields as ordered JSON text.
std::string report_json(const SolveReport& r);

struct SweepRow {
  double value = 0.0;
  std::optional<SolveReport> report;  // empty when the row failed
  std::string error;                  // error code name, e.g. BetaNotAboveOne
};

/// Names accepted by cmd_sweep: mu, sigma, q, beta, cap.<i> (coefficient index).
bool is_sweep_param(const std::string& name);

/// One independent solve per value. Failed rows carry the error code and do
/// not stop the sweep. Writes sweep.csv into out_dir when it is non-empty.
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::string& param,
                                const std::vector<double>& values,
                                const std::filesystem::path& out_dir = {});
void write_sweep_csv(const std::string& param, const std::vector<SweepRow>& rows, std::ostream& out);

enum class CheckStatus { Pass, Fail, Skipped };
std::string_view to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double value = 0.0;      // measured quantity (residual, error, violation count)
  double threshold = 0.0;  // pass limit for value
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  const CheckResult* find(const std::string& name) const;
};

/// Invariant suite. Monte Carlo items are Skipped when run_sim is false.
/// Writes verify.json into out_dir when it is non-empty.
VerifyReport cmd_verify(const RunConfig& cfg, bool run_sim, const std::filesystem::path& out_dir = {});
std::string verify_json(const VerifyReport& r);

/// Simulates cfg.simulate (strategy, barrier, x0) and returns the JSON text
/// that is also written to out_dir/simulate.json. Byte-identical for equal
/// inputs.
std::string cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir = {});

}  // namespace divcap
