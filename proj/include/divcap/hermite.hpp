#pragma once

#include <cstddef>
#include <span>

namespace divcap {

struct Jet {
  double value;
  double d1;
  double d2;
};

/// Index k with grid[k] <= x <= grid[k+1], clamped to the grid ends.
std::size_t locate_interval(std::span<const double> grid, double x);

/// Cubic Hermite interpolation on [x0, x1] from values and first derivatives.
Jet cubic_hermite(double x0, double x1, double v0, double d0, double v1, double d1, double x);

/// Quintic Hermite interpolation on [x0, x1] from (value, d1, d2) at both ends.
Jet quintic_hermite(double x0, double x1, const Jet& left, const Jet& right, double x);

}  // namespace divcap
