#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "divcap/fluctuation.hpp"
#include "divcap/hermite.hpp"
#include "divcap/ode_engine.hpp"

namespace divcap {

/// Everything the closed forms need: parameters, cap, scale functions, phi and I_F.
struct ModelSolution {
  ModelParams params;
  RateCap cap;
  FluctuationKit kit;
  OdeSolution phi;
  OdeSolution IF;

  double x_max() const { return phi.x_max(); }
};

ModelSolution solve_model(const ModelParams& params, const RateCap& cap, const OdeOptions& opts = {});

/// Which one-sided branch to evaluate at a barrier.
enum class Side { Auto, Left, Right };

// ---------------------------------------------------------------------------
// No-injection family: pay F above b, stop at ruin.

struct BarrierCoeffsD {
  double b;
  double D1;
  double D2;
};

BarrierCoeffsD coeffs_d(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit,
                        double b);

/// J_d(.; b) with value, slope and second derivative. Auto picks the left
/// branch for x < b.
Jet J_d(const ModelSolution& m, const BarrierCoeffsD& c, double x, Side side = Side::Auto);

/// I_F'(0) - I_F(0) phi'(0); b_d = 0 exactly when this is <= 1.
double bd_condition(const OdeSolution& phi, const OdeSolution& IF);

/// p(b) - 1 + (psi/psi')(b) phi'(b)/phi(b): the smooth-fit equation for b_d divided by phi(b).
double bd_equation(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit, double b);

struct BdResult {
  double b;
  double condition;
  bool borderline;           // condition within 1e-8 of 1; both branches compared
  std::vector<double> roots; // every sign change located by the scan
};

BdResult find_b_d(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit);

double vd_prime_zero(double b_d, const FluctuationKit& kit, const OdeSolution& phi,
                     const OdeSolution& IF);

// ---------------------------------------------------------------------------
// Forced-injection family: pay F above b, reflect at 0 at unit cost beta.

struct BarrierCoeffsC {
  double b;
  double C1, C2, C3, C4;
  double beta;
  double half_var;

  /// Multiplier of Psi on [0, b): C1 - beta s^2/2 C3.
  double left() const { return C1 - beta * half_var * C3; }
  /// Multiplier of phi on [b, inf): C2 - beta s^2/2 C4.
  double right() const { return C2 - beta * half_var * C4; }
};

BarrierCoeffsC coeffs_c(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit,
                        double beta, double b);

Jet J_c(const ModelSolution& m, const BarrierCoeffsC& c, double x, Side side = Side::Auto);

/// J_c'(b-; b) - 1.
double bc_equation(const ModelSolution& m, double b);

struct BcResult {
  double b;
  std::vector<double> roots;
  bool multiple;  // more than one sign change; the root with the largest J_c(0; .) wins
};

BcResult find_b_c(const ModelSolution& m);

struct SupercontactResiduals {
  double eq_bc1;  // (1 - beta s^2/2 psi')/Psi' - (C1 - beta s^2/2 C3)
  double eq_bc2;  // (1 - I_F')/phi' - (C2 - beta s^2/2 C4)
  double slope_left_minus_one;
  double slope_right_minus_one;
  double second_jump;  // |J''(b-) - J''(b+)| / (1 + |J''(b-)|)
};

SupercontactResiduals supercontact_residuals(const ModelSolution& m, double b);

/// E_x[exp(-q tau_0)] for the refracted process with threshold b.
double first_passage_h(double x, double b, const FluctuationKit& kit, const OdeSolution& phi);

// ---------------------------------------------------------------------------
// Dichotomy

enum class RegimeKind { NoInjection, Bailout, Indifferent };
std::string_view to_string(RegimeKind kind);

struct Regime {
  RegimeKind kind;
  double b_d;
  double b_c;
  double vd_prime_zero;
  double vc_zero;
  double beta;
  double tie_band;     // on vd_prime_zero - beta
  double vc_tie_band;  // on vc_zero
  BdResult bd;
  BcResult bc;
  BarrierCoeffsD cd;
  BarrierCoeffsC cc;
};

Regime decide_regime(const ModelSolution& m);

Jet value_Vd(const ModelSolution& m, const Regime& r, double x);
Jet value_Vc(const ModelSolution& m, const Regime& r, double x);
/// V under the decided regime; the larger candidate when indifferent.
Jet value_V(const ModelSolution& m, const Regime& r, double x);

/// Optimal dividend rate at x under the decided regime.
double optimal_rate(const ModelSolution& m, const Regime& r, double x);

using ValueFn = std::function<Jet(double)>;

/// sup_x |q u - max_{l in {0, F}} [(mu - l) u' + s^2/2 u'' + l]| / (1 + |u|).
double hjb_residual(const ModelParams& params, const RateCap& cap, const ValueFn& u,
                    std::span<const double> xs);

/// Constants of the linear bound V_c(x) <= C + A x.
struct GrowthBound {
  double A;
  double C;
};
GrowthBound growth_bound(const ModelSolution& m, const Regime& r);

/// n points spread uniformly on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace divcap
