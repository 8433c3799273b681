#include "divcap/hermite.hpp"

#include <algorithm>

namespace divcap {

std::size_t locate_interval(std::span<const double> grid, double x) {
  const std::size_t n = grid.size();
  if (x <= grid[0]) return 0;
  if (x >= grid[n - 1]) return n - 2;
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  return static_cast<std::size_t>(it - grid.begin()) - 1;
}

Jet cubic_hermite(double x0, double x1, double v0, double d0, double v1, double d1, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double value = (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * d0 +
                       (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * d1;
  const double slope = ((6 * t2 - 6 * t) * v0 + (-6 * t2 + 6 * t) * v1) / h +
                       (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1;
  const double curv = ((12 * t - 6) * v0 + (-12 * t + 6) * v1) / (h * h) +
                      ((6 * t - 4) * d0 + (6 * t - 2) * d1) / h;
  return {value, slope, curv};
}

Jet quintic_hermite(double x0, double x1, const Jet& left, const Jet& right, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;

  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h3 = 0.5 * (t3 - 2 * t4 + t5);

  const double g0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double g1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double g2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  const double g5 = -g0;
  const double g4 = -12 * t2 + 28 * t3 - 15 * t4;
  const double g3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);

  const double k0 = -60 * t + 180 * t2 - 120 * t3;
  const double k1 = -36 * t + 96 * t2 - 60 * t3;
  const double k2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
  const double k5 = -k0;
  const double k4 = -24 * t + 84 * t2 - 60 * t3;
  const double k3 = 0.5 * (6 * t - 24 * t2 + 20 * t3);

  const double hh = h * h;
  const double value = left.value * h0 + h * left.d1 * h1 + hh * left.d2 * h2 + right.value * h5 +
                       h * right.d1 * h4 + hh * right.d2 * h3;
  const double slope = (left.value * g0 + right.value * g5) / h + left.d1 * g1 + right.d1 * g4 +
                       h * (left.d2 * g2 + right.d2 * g3);
  const double curv = (left.value * k0 + right.value * k5) / hh + (left.d1 * k1 + right.d1 * k4) / h +
                      left.d2 * k2 + right.d2 * k3;
  return {value, slope, curv};
}

}  // namespace divcap
