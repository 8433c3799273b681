#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "divcap/core_model.hpp"
#include "divcap/hermite.hpp"

namespace divcap {

enum class SolutionKind { Phi, IF };

struct OdeOptions {
  double x_max = 0.0;         // 0 picks a domain from the cap (see default_x_max)
  double tol = 1e-8;          // integrator tolerance driver
  double residual_tol = 1e-7; // acceptance level for ode_residual
  std::size_t grid_n = 4001;
  double far_field_tol = 1e-6;  // largest admissible damping factor of the far-field error
};

/// Grid-backed solution of one of the two killed ODEs under drift mu - F(x):
///   Phi: (s^2/2) u'' + (mu - F) u' - q u = 0,      u(0) = 1, decreasing
///   IF : (s^2/2) u'' + (mu - F) u' - q u + F = 0,  u'(0) = 0, linear growth
/// Between nodes the function is quintic Hermite in (value, d1, d2).
class OdeSolution {
public:
  /// Wraps externally computed nodes (e.g. an analytic oracle). Node second
  /// derivatives are recovered from the ODE.
  static OdeSolution from_grid(SolutionKind kind, const ModelParams& params, const RateCap& cap,
                               std::vector<double> grid, std::vector<double> values,
                               std::vector<double> derivs);

  SolutionKind kind() const noexcept { return kind_; }
  const ModelParams& params() const noexcept { return params_; }
  const RateCap& cap() const noexcept { return cap_; }
  std::span<const double> grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> derivs() const noexcept { return derivs_; }
  double x_max() const noexcept { return grid_.back(); }
  double residual_sup() const noexcept { return residual_sup_; }
  /// Phi: |u(0) - 1|.  IF: |u'(0)|.
  double boundary_defect() const noexcept { return boundary_defect_; }
  /// exp(-int_0^{x_max} (theta1 - theta2)): how much a far-field error is damped at x = 0.
  double far_field_attenuation() const noexcept { return attenuation_; }

  /// Value and slope from the interpolant, second derivative from the ODE.
  Jet eval(double x) const;
  /// All three from the interpolant.
  Jet interpolate(double x) const;
  /// Inhomogeneous term at x: F(x) for IF, 0 for Phi.
  double source(double x) const;
  /// u'' implied by the ODE at (x, value, d1).
  double ode_second(double x, double value, double d1) const;

  /// Phi only: phi(x)/phi(y) through log values, accurate far into the tail.
  double ratio(double x, double y) const;
  /// Phi only: phi'(x)/phi(x).
  double log_slope(double x) const;

  /// Returns u + lambda * phi (IF only). The result is again a solution of the
  /// IF equation, but with u'(0) = lambda phi'(0).
  OdeSolution shifted(double lambda, const OdeSolution& phi) const;

private:
  OdeSolution(SolutionKind kind, const ModelParams& params, const RateCap& cap)
      : kind_(kind), params_(params), cap_(cap) {}
  void finalize();
  void check_domain(double x) const;
  std::size_t cell(double x) const;

  SolutionKind kind_;
  ModelParams params_;
  RateCap cap_;
  std::vector<double> grid_, values_, derivs_, seconds_;
  std::vector<double> log_values_, log_d1_, log_d2_;  // Phi only
  double residual_sup_ = 0.0;
  double boundary_defect_ = 0.0;
  double attenuation_ = 0.0;

  friend struct OdeSolverAccess;
};

struct SolvedPair {
  OdeSolution phi;
  OdeSolution IF;
};

/// Default domain: the smallest x with exp(int_0^x theta2) < 1e-10 for the local
/// constant-cap root theta2, floored at 20 and capped at 1e4. Caps still growing
/// at 1e4 decay only polynomially and get the floor.
double default_x_max(const ModelParams& params, const RateCap& cap);

/// Node layout: x = a sinh(u asinh(x_max/a)), u uniform, a = min(5, x_max).
std::vector<double> make_grid(double x_max, std::size_t n);

SolvedPair solve_pair(const ModelParams& params, const RateCap& cap, const OdeOptions& opts = {});
OdeSolution solve_phi(const ModelParams& params, const RateCap& cap, const OdeOptions& opts = {});
OdeSolution solve_IF(const ModelParams& params, const RateCap& cap, const OdeOptions& opts = {});

struct SolutionJet {
  double value, d1, d2;
};
SolutionJet eval_solution(const OdeSolution& sol, double x);

/// Sup over cell quarter points of |ODE left side| / (1 + |u|), using the
/// interpolant's own second derivative.
double ode_residual(const OdeSolution& sol);

/// CSV with header x,value,deriv.
void write_solution_csv(const OdeSolution& sol, std::ostream& out);

}  // namespace divcap
