#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "divcap/core_model.hpp"

namespace divcap {

/// Number of step sizes simulated together: dt, 2 dt, 4 dt.
inline constexpr std::size_t kLevels = 3;

enum class Boundary {
  Absorb,   // stop at the first state below 0 (refracted process)
  Reflect,  // push back to 0 and book the push as an injection
};

/// One controlled Euler scheme: rate F(x) 1{x >= b}, fixed step dt.
struct KernelSpec {
  double mu = 0.0;
  double sigma = 1.0;
  double q = 1.0;
  const RateCap* cap = nullptr;
  double b = 0.0;
  double x0 = 0.0;
  Boundary boundary = Boundary::Absorb;
  double dt = 1e-3;
  std::size_t n_steps = 0;  // fine steps, multiple of 4
  bool multilevel = true;   // also run 2 dt and 4 dt on summed fine normals
  bool bridge = false;      // Brownian-bridge crossing weight (Absorb only)
  std::uint64_t seed = 0;
  bool antithetic = true;   // paths 2k and 2k+1 share normals with opposite signs
};

/// Per-path discounted totals at each level.
struct PathRecord {
  std::array<double, kLevels> dividends{};
  std::array<double, kLevels> injections{};
  std::array<double, kLevels> laplace{};   // sum of exp(-q tau_0) over killed mass
  std::array<double, kLevels> survival{};  // mass still alive at the horizon
  std::array<std::uint32_t, kLevels> steps{};  // steps taken before termination
};

/// Observer for the fine level: (path, t, state before the step, rate, injection).
using TraceFn = std::function<void(std::size_t, double, double, double, double)>;

/// Seed of the normal stream for unit k (a path, or an antithetic pair).
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t unit);

/// Reference implementation, one path unit after another.
std::vector<PathRecord> simulate_serial(const KernelSpec& spec, std::size_t n_paths,
                                        const TraceFn& trace = {}, std::size_t trace_paths = 0);

/// OpenMP version. Bit-identical to simulate_serial for any thread count.
std::vector<PathRecord> simulate_parallel(const KernelSpec& spec, std::size_t n_paths,
                                          int threads = 0);

}  // namespace divcap
