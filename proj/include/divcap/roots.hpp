#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace divcap {

struct RootResult {
  double root;
  double residual;
  int iterations;
};

/// Brent's method on a sign-changing bracket [a, b]. Returns std::nullopt if
/// f(a) and f(b) have the same strict sign.
template <class Fn>
std::optional<RootResult> brent_root(Fn&& f, double a, double b, double xtol, int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return RootResult{a, 0.0, 0};
  if (fb == 0.0) return RootResult{b, 0.0, 0};
  if ((fa > 0.0) == (fb > 0.0)) return std::nullopt;

  double c = a, fc = fa;
  double d = b - a, e = d;
  const double eps = std::numeric_limits<double>::epsilon();
  int it = 0;
  for (; it < max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * eps * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) break;

    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      // Inverse quadratic interpolation, or secant when only two points differ.
      double p, qd;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        qd = 1.0 - s;
      } else {
        const double qa = fa / fc, r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        qd = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) qd = -qd;
      else p = -p;
      if (2.0 * p < std::min(3.0 * m * qd - std::abs(tol * qd), std::abs(e * qd))) {
        e = d;
        d = p / qd;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
  }
  return RootResult{b, fb, it};
}

}  // namespace divcap
