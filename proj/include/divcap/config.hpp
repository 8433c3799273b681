#pragma once

#include <optional>
#include <string>
#include <vector>

#include "divcap/core_model.hpp"
#include "divcap/ode_engine.hpp"
#include "divcap/sim_kernels.hpp"
#include "divcap/sim_oracle.hpp"

namespace divcap {

struct CapSpec {
  CapKind kind = CapKind::Constant;
  std::vector<double> coefficients;
};

struct SimulateOptions {
  Boundary strategy = Boundary::Reflect;
  std::optional<double> b;  // empty: the optimal barrier of the strategy family
  double x0 = 0.0;
  std::size_t dump_paths = 0;
};

struct SweepOptions {
  std::string param;
  std::vector<double> values;
};

struct VerifyOptions {
  std::vector<double> mc_points{0.5, 1.0};  // multiples of the relevant barrier
  std::size_t domination_paths = 10000;
};

struct OutputOptions {
  std::size_t grid_n = 401;
  double grid_max = 0.0;  // 0: max(5, 4 max(b_d, b_c)) clipped to x_max
};

/// Everything a run needs. Built only through load_config / parse_config,
/// so params and cap are validated.
struct RunConfig {
  RawParams raw;
  CapSpec cap_spec;
  OdeOptions numerics;
  SimConfig sim;
  SimulateOptions simulate;
  SweepOptions sweep;
  VerifyOptions verify;
  OutputOptions output;

  std::optional<ModelParams> params;
  std::optional<RateCap> cap;
};

/// Parses JSON text (// and /* */ comments allowed). Throws Error with
/// ConfigError for unknown or mistyped keys, or the validation code of a bad
/// parameter.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Re-validates params and cap after raw fields were edited.
void revalidate(RunConfig& cfg);

/// True for error codes that mean "bad input" rather than "solver failed".
bool is_config_error(ErrorCode code);

}  // namespace divcap
