#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "divcap/barrier_solver.hpp"
#include "divcap/core_model.hpp"

namespace divcap::testing {

/// Small property-test generator: draws model parameters and caps from
/// ranges where the solver is expected to work, reproducibly from a seed.
class Gen {
public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  RawParams raw_params() {
    return {uniform(-1.0, 2.0), uniform(0.5, 2.0), uniform(0.2, 2.0), uniform(1.05, 3.0)};
  }
  ModelParams params() { return validate_params(raw_params()); }

  /// Affine cap c0 + c1 x with c0 in [0, 1], c1 in [0, 1].
  RateCap affine_cap() {
    const std::array<double, 2> c{uniform(0.0, 1.0), uniform(0.0, 1.0)};
    return make_rate_cap(CapKind::Affine, c);
  }
  RateCap constant_cap() {
    const std::array<double, 1> c{uniform(0.0, 2.0)};
    return make_rate_cap(CapKind::Constant, c);
  }

  /// Interleaved knots of a nondecreasing concave table with n points.
  std::vector<double> concave_knots(int n) {
    std::vector<double> k;
    double x = 0.0, y = uniform(0.0, 1.0), slope = uniform(0.5, 2.0);
    for (int i = 0; i < n; ++i) {
      k.push_back(x);
      k.push_back(y);
      const double h = uniform(0.2, 1.5);
      x += h;
      y += slope * h;
      slope *= uniform(0.3, 0.95);
    }
    return k;
  }

private:
  std::mt19937_64 eng_;
};

inline ModelParams params(double mu, double sigma, double q, double beta) {
  return validate_params({mu, sigma, q, beta});
}

inline RateCap affine(double c0, double c1) {
  const std::array<double, 2> c{c0, c1};
  return make_rate_cap(CapKind::Affine, c);
}
inline RateCap constant(double s) {
  const std::array<double, 1> c{s};
  return make_rate_cap(CapKind::Constant, c);
}
inline RateCap linear(double k) {
  const std::array<double, 1> c{k};
  return make_rate_cap(CapKind::Linear, c);
}

/// Decaying root of (s^2/2) t^2 + (mu - S) t - q = 0.
inline double theta2(double mu, double sigma, double q, double s) {
  const double m = mu - s;
  return (-m - std::sqrt(m * m + 2.0 * q * sigma * sigma)) / (sigma * sigma);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace divcap::testing
