#include "divcap/sim_kernels.hpp"

#include <cmath>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <omp.h>

namespace divcap {

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t unit) {
  // splitmix64 finaliser over a mix of the master seed and the unit index
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ mix(unit + 0x632BE59BD9B4E019ULL));
}

namespace {

struct Level {
  double x;
  double disc;  // exp(-q t) at the current step start
  double weight;  // surviving mass (< 1 only with the bridge correction)
  bool alive;
};

// Everything that is constant along a path for one level.
struct LevelConst {
  double h;          // step size
  double sqrt_h;
  double step_disc;  // exp(-q h)
  double accrual;    // int_0^h exp(-q t) dt
};

class Unit {
public:
  Unit(const KernelSpec& s, int signs) : s_(s), signs_(signs) {
    const std::size_t levels = s.multilevel ? kLevels : 1;
    levels_ = levels;
    for (std::size_t l = 0; l < levels; ++l) {
      const double h = s.dt * static_cast<double>(1u << l);
      lc_[l] = {h, std::sqrt(h), std::exp(-s.q * h), -std::expm1(-s.q * h) / s.q};
    }
  }

  // Runs the unit and writes signs_ records. trace may be null.
  void run(std::uint64_t unit, PathRecord* out, const TraceFn* trace, std::size_t first_path) {
    boost::random::mt19937_64 eng(stream_seed(s_.seed, unit));
    boost::random::normal_distribution<double> normal;

    std::array<std::array<Level, kLevels>, 2> st{};
    for (int k = 0; k < signs_; ++k) {
      out[k] = PathRecord{};
      for (std::size_t l = 0; l < levels_; ++l) {
        st[k][l] = {s_.x0, 1.0, 1.0, true};
        // Started at the boundary, an absorbed path is ruined at time 0.
        if (s_.boundary == Boundary::Absorb && s_.x0 <= 0.0) {
          st[k][l].alive = false;
          out[k].laplace[l] = 1.0;
        }
      }
    }

    double sum2 = 0.0, sum4 = 0.0;
    std::size_t active = count_alive(st);
    for (std::size_t n = 0; n < s_.n_steps && active > 0; ++n) {
      const double z = normal(eng);
      sum2 += z;
      sum4 += z;
      for (int k = 0; k < signs_; ++k) {
        const double sg = k == 0 ? 1.0 : -1.0;
        step(st[k][0], out[k], 0, sg * z, n,
             trace && first_path + k < trace_limit_ ? trace : nullptr, first_path + k);
        if (levels_ > 1 && (n & 1u) == 1u) step(st[k][1], out[k], 1, sg * sum2 * M_SQRT1_2, n, nullptr, 0);
        if (levels_ > 2 && (n & 3u) == 3u) step(st[k][2], out[k], 2, sg * sum4 * 0.5, n, nullptr, 0);
      }
      if ((n & 1u) == 1u) sum2 = 0.0;
      if ((n & 3u) == 3u) {
        sum4 = 0.0;
        if (s_.boundary == Boundary::Absorb) active = count_alive(st);
      }
      if (s_.boundary == Boundary::Absorb && levels_ == 1) active = count_alive(st);
    }
    for (int k = 0; k < signs_; ++k)
      for (std::size_t l = 0; l < levels_; ++l)
        out[k].survival[l] = st[k][l].alive ? st[k][l].weight : 0.0;
  }

  void set_trace_limit(std::size_t n) { trace_limit_ = n; }

private:
  std::size_t count_alive(const std::array<std::array<Level, kLevels>, 2>& st) const {
    std::size_t a = 0;
    for (int k = 0; k < signs_; ++k)
      for (std::size_t l = 0; l < levels_; ++l) a += st[k][l].alive;
    return a;
  }

  void step(Level& lv, PathRecord& rec, std::size_t l, double z, std::size_t n, const TraceFn* trace,
            std::size_t path) {
    if (!lv.alive) return;
    const LevelConst& c = lc_[l];
    const double rate = lv.x >= s_.b ? s_.cap->value(lv.x) : 0.0;
    rec.dividends[l] += lv.weight * lv.disc * rate * c.accrual;
    const double y = lv.x + (s_.mu - rate) * c.h + s_.sigma * c.sqrt_h * z;
    const double end_disc = lv.disc * c.step_disc;
    double inj = 0.0;
    ++rec.steps[l];
    if (s_.boundary == Boundary::Reflect) {
      if (y < 0.0) {
        inj = -y;
        rec.injections[l] += end_disc * inj;
        lv.x = 0.0;
      } else {
        lv.x = y;
      }
    } else if (y < 0.0) {
      rec.laplace[l] += lv.weight * end_disc;
      lv.alive = false;
    } else {
      if (s_.bridge) {
        // P(bridge from x to y dips below 0) for Brownian motion over one step.
        const double p = std::exp(-2.0 * lv.x * y / (s_.sigma * s_.sigma * c.h));
        rec.laplace[l] += lv.weight * p * end_disc;
        lv.weight *= 1.0 - p;
      }
      lv.x = y;
    }
    if (trace) (*trace)(path, static_cast<double>(n + 1) * c.h, lv.x, rate, inj);
    lv.disc = end_disc;
  }

  const KernelSpec& s_;
  int signs_;
  std::size_t levels_ = 1;
  std::array<LevelConst, kLevels> lc_{};
  std::size_t trace_limit_ = 0;
};

void check_spec(const KernelSpec& s, std::size_t n_paths) {
  if (!s.cap) throw Error(ErrorCode::ConfigError, "kernel spec without a rate cap");
  if (!(s.dt > 0.0)) throw Error(ErrorCode::ConfigError, "sim.dt must be > 0");
  if (s.n_steps == 0 || s.n_steps % 4 != 0)
    throw Error(ErrorCode::ConfigError, "kernel step count must be a positive multiple of 4");
  if (n_paths == 0) throw Error(ErrorCode::ConfigError, "sim.n_paths must be > 0");
  if (s.antithetic && n_paths % 2 != 0)
    throw Error(ErrorCode::ConfigError, "antithetic sampling needs an even number of paths");
  if (s.x0 < 0.0) throw Error(ErrorCode::NegativeArgument, "x0 must be >= 0");
}

}  // namespace

std::vector<PathRecord> simulate_serial(const KernelSpec& spec, std::size_t n_paths,
                                        const TraceFn& trace, std::size_t trace_paths) {
  check_spec(spec, n_paths);
  const int signs = spec.antithetic ? 2 : 1;
  const std::size_t units = n_paths / static_cast<std::size_t>(signs);
  std::vector<PathRecord> out(n_paths);
  Unit u(spec, signs);
  u.set_trace_limit(trace ? trace_paths : 0);
  const TraceFn* tp = trace ? &trace : nullptr;
  for (std::size_t k = 0; k < units; ++k) u.run(k, &out[k * signs], tp, k * signs);
  return out;
}

std::vector<PathRecord> simulate_parallel(const KernelSpec& spec, std::size_t n_paths, int threads) {
  check_spec(spec, n_paths);
  const int signs = spec.antithetic ? 2 : 1;
  const long units = static_cast<long>(n_paths / static_cast<std::size_t>(signs));
  std::vector<PathRecord> out(n_paths);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
  {
    Unit u(spec, signs);
#pragma omp for schedule(dynamic, 64)
    for (long k = 0; k < units; ++k) u.run(static_cast<std::uint64_t>(k), &out[k * signs], nullptr, 0);
  }
  return out;
}

}  // namespace divcap
