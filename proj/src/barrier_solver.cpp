#include "divcap/barrier_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "divcap/roots.hpp"

namespace divcap {

namespace {

constexpr double kScanPerDecade = 25.0;
constexpr double kScanStart = 2e-6;
constexpr double kRootTol = 1e-13;
constexpr double kBorderline = 1e-8;
constexpr double kTieRel = 1e-6;

void require_positive_den(double den, double b, const char* what) {
  if (!std::isfinite(den) || std::abs(den) < 1e-300) {
    std::ostringstream os;
    os << what << " denominator vanishes at b = " << b;
    throw Error(ErrorCode::SingularDenominator, os.str());
  }
}

// Geometric scan of (0, x_max) for sign changes of g, each refined by Brent.
template <class Fn>
std::vector<double> scan_roots(Fn&& g, double g0, double x_max) {
  std::vector<double> roots;
  double prev_b = 0.0, prev_g = g0;
  const double lo = std::min(kScanStart, 1e-7 * x_max);
  const auto points = static_cast<std::size_t>(std::ceil(kScanPerDecade * std::log10(x_max / lo))) + 2;
  for (std::size_t k = 0; k < points; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(points - 1);
    const double b = lo * std::pow(x_max / lo, u);
    const double gb = g(b);
    if (std::isfinite(gb) && std::isfinite(prev_g) && ((gb > 0.0) != (prev_g > 0.0) || gb == 0.0)) {
      if (gb == 0.0) {
        roots.push_back(b);
      } else if (auto r = brent_root(g, prev_b, b, kRootTol * std::max(1.0, b))) {
        roots.push_back(r->root);
      }
    }
    prev_b = b;
    prev_g = gb;
  }
  return roots;
}

}  // namespace

ModelSolution solve_model(const ModelParams& params, const RateCap& cap, const OdeOptions& opts) {
  SolvedPair pair = solve_pair(params, cap, opts);
  return ModelSolution{params, cap, build_kit(params), std::move(pair.phi), std::move(pair.IF)};
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

// ---------------------------------------------------------------------------
// J_d

BarrierCoeffsD coeffs_d(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit,
                        double b) {
  if (b < 0.0) throw Error(ErrorCode::ArgumentOutOfRange, "barrier must be >= 0");
  const Jet f = phi.eval(b);
  const Jet u = IF.eval(b);
  const double ps = kit.psi(b), dps = kit.psi_prime(b);
  const double den = f.value * dps - f.d1 * ps;
  require_positive_den(den, b, "phi psi' - phi' psi");
  return {b, (f.value * u.d1 - f.d1 * u.value) / den, (ps * u.d1 - dps * u.value) / den};
}

Jet J_d(const ModelSolution& m, const BarrierCoeffsD& c, double x, Side side) {
  if (x < 0.0) throw Error(ErrorCode::OutOfDomain, "J_d needs x >= 0");
  if (x > m.x_max() * (1.0 + 1e-12)) throw Error(ErrorCode::OutOfDomain, "J_d beyond x_max");
  const bool left = side == Side::Left || (side == Side::Auto && x < c.b);
  if (left) {
    return {c.D1 * m.kit.psi(x), c.D1 * m.kit.psi_prime(x), c.D1 * m.kit.psi_second(x)};
  }
  const Jet f = m.phi.eval(x);
  const Jet u = m.IF.eval(x);
  // b = 0: ruin at 0 pins the value, drop the rounding left by D2 phi + I_F.
  const double v = x == 0.0 ? 0.0 : c.D2 * f.value + u.value;
  return {v, c.D2 * f.d1 + u.d1, c.D2 * f.d2 + u.d2};
}

double bd_condition(const OdeSolution& phi, const OdeSolution& IF) {
  const Jet f = phi.eval(0.0);
  const Jet u = IF.eval(0.0);
  // Divided by phi(0) so the expression stays right for unnormalised phi.
  return (u.d1 - u.value * f.d1 / f.value);
}

double bd_equation(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit, double b) {
  const Jet f = phi.eval(b);
  const Jet u = IF.eval(b);
  const double r = f.d1 / f.value;
  const double p = u.d1 - r * u.value;
  return p - 1.0 + kit.psi(b) / kit.psi_prime(b) * r;
}

BdResult find_b_d(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit) {
  BdResult res{0.0, bd_condition(phi, IF), false, {}};
  const bool borderline = std::abs(res.condition - 1.0) < kBorderline;
  if (res.condition <= 1.0 && !borderline) return res;

  auto g = [&](double b) { return bd_equation(phi, IF, kit, b); };
  res.roots = scan_roots(g, res.condition - 1.0, phi.x_max());

  if (borderline) {
    res.borderline = true;
    if (res.roots.empty()) return res;
    // Compare b = 0 with the first root at a probe point.
    const double cand = res.roots.front();
    const double probe = std::min(phi.x_max(), std::max(1.0, 2.0 * cand));
    auto value_at = [&](double b) {
      const BarrierCoeffsD c = coeffs_d(phi, IF, kit, b);
      if (probe < b) return c.D1 * kit.psi(probe);
      return c.D2 * phi.eval(probe).value + IF.eval(probe).value;
    };
    res.b = value_at(cand) > value_at(0.0) ? cand : 0.0;
    return res;
  }
  if (res.roots.empty()) {
    std::ostringstream os;
    os << "no sign change of the b_d equation in (0, " << phi.x_max() << ")";
    throw Error(ErrorCode::NoBracketFound, os.str());
  }
  res.b = res.roots.front();
  return res;
}

double vd_prime_zero(double b_d, const FluctuationKit& kit, const OdeSolution& phi,
                     const OdeSolution& IF) {
  if (b_d <= 0.0) return bd_condition(phi, IF);
  const double s2 = kit.sigma() * kit.sigma();
  const double a1 = kit.alpha1(), a2 = kit.alpha2();
  return (2.0 / s2) * kit.delta() / (a1 * std::exp(a1 * b_d) - a2 * std::exp(a2 * b_d));
}

// ---------------------------------------------------------------------------
// J_c

namespace {

struct C34 {
  double C3, C4, den;
};

C34 coeffs_34(const Jet& f, const FluctuationKit& kit, double b) {
  const double ps = kit.psi(b), dps = kit.psi_prime(b);
  const double Ps = kit.Psi(b), dPs = kit.Psi_prime(b);
  const double den = f.value * dPs - f.d1 * Ps;
  require_positive_den(den, b, "phi Psi' - phi' Psi");
  return {(dps * f.value - ps * f.d1) / den, (Ps * dps - dPs * ps) / den, den};
}

}  // namespace

BarrierCoeffsC coeffs_c(const OdeSolution& phi, const OdeSolution& IF, const FluctuationKit& kit,
                        double beta, double b) {
  if (!(b > 0.0)) throw Error(ErrorCode::ArgumentOutOfRange, "forced-injection barrier must be > 0");
  const Jet f = phi.eval(b);
  const Jet u = IF.eval(b);
  const C34 c34 = coeffs_34(f, kit, b);
  const double Ps = kit.Psi(b), dPs = kit.Psi_prime(b);
  const double C1 = (f.value * u.d1 - f.d1 * u.value) / c34.den;
  const double C2 = (Ps * u.d1 - dPs * u.value) / c34.den;
  const double hv = 0.5 * kit.sigma() * kit.sigma();
  return {b, C1, C2, c34.C3, c34.C4, beta, hv};
}

Jet J_c(const ModelSolution& m, const BarrierCoeffsC& c, double x, Side side) {
  if (x < 0.0) throw Error(ErrorCode::OutOfDomain, "J_c needs x >= 0");
  if (x > m.x_max() * (1.0 + 1e-12)) throw Error(ErrorCode::OutOfDomain, "J_c beyond x_max");
  const bool left = side == Side::Left || (side == Side::Auto && x < c.b);
  const double w = c.beta * c.half_var;
  if (left) {
    const double A = c.left();
    const FluctuationKit& k = m.kit;
    return {A * k.Psi(x) + w * k.psi(x), A * k.Psi_prime(x) + w * k.psi_prime(x),
            A * k.Psi_second(x) + w * k.psi_second(x)};
  }
  const double B = c.right();
  const Jet f = m.phi.eval(x);
  const Jet u = m.IF.eval(x);
  return {B * f.value + u.value, B * f.d1 + u.d1, B * f.d2 + u.d2};
}

double bc_equation(const ModelSolution& m, double b) {
  const BarrierCoeffsC c = coeffs_c(m.phi, m.IF, m.kit, m.params.beta(), b);
  return c.left() * m.kit.Psi_prime(b) + c.beta * c.half_var * m.kit.psi_prime(b) - 1.0;
}

BcResult find_b_c(const ModelSolution& m) {
  auto g = [&](double b) { return bc_equation(m, b); };
  // As b -> 0 the left slope tends to beta > 1.
  BcResult res{0.0, scan_roots(g, m.params.beta() - 1.0, m.x_max()), false};
  if (res.roots.empty()) {
    std::ostringstream os;
    os << "no sign change of the b_c equation in (0, " << m.x_max() << ")";
    throw Error(ErrorCode::NoBracketFound, os.str());
  }
  res.multiple = res.roots.size() > 1;
  double best = -INFINITY;
  for (double b : res.roots) {
    const double v0 = coeffs_c(m.phi, m.IF, m.kit, m.params.beta(), b).left();
    if (v0 > best) {
      best = v0;
      res.b = b;
    }
  }
  return res;
}

SupercontactResiduals supercontact_residuals(const ModelSolution& m, double b) {
  const BarrierCoeffsC c = coeffs_c(m.phi, m.IF, m.kit, m.params.beta(), b);
  const Jet f = m.phi.eval(b);
  const Jet u = m.IF.eval(b);
  const double w = c.beta * c.half_var;
  SupercontactResiduals r{};
  r.eq_bc1 = (1.0 - w * m.kit.psi_prime(b)) / m.kit.Psi_prime(b) - c.left();
  r.eq_bc2 = (1.0 - u.d1) / f.d1 - c.right();
  const Jet lj = J_c(m, c, b, Side::Left);
  const Jet rj = J_c(m, c, b, Side::Right);
  r.slope_left_minus_one = lj.d1 - 1.0;
  r.slope_right_minus_one = rj.d1 - 1.0;
  r.second_jump = std::abs(lj.d2 - rj.d2) / (1.0 + std::abs(lj.d2));
  return r;
}

double first_passage_h(double x, double b, const FluctuationKit& kit, const OdeSolution& phi) {
  if (x < 0.0 || x > phi.x_max() * (1.0 + 1e-12))
    throw Error(ErrorCode::OutOfDomain, "first_passage_h outside [0, x_max]");
  if (b < 0.0) throw Error(ErrorCode::ArgumentOutOfRange, "barrier must be >= 0");
  if (b == 0.0) return phi.ratio(x, 0.0);
  const C34 c = coeffs_34(phi.eval(b), kit, b);
  if (x < b) return kit.Psi(x) - kit.psi(x) / c.C3;
  return phi.eval(x).value * c.C4 / c.C3;
}

// ---------------------------------------------------------------------------
// Dichotomy

std::string_view to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::NoInjection: return "NoInjection";
    case RegimeKind::Bailout: return "Bailout";
    case RegimeKind::Indifferent: return "Indifferent";
  }
  return "Unknown";
}

Regime decide_regime(const ModelSolution& m) {
  const double beta = m.params.beta();
  Regime r{};
  r.beta = beta;
  r.bd = find_b_d(m.phi, m.IF, m.kit);
  r.b_d = r.bd.b;
  r.cd = coeffs_d(m.phi, m.IF, m.kit, r.b_d);
  r.vd_prime_zero = vd_prime_zero(r.b_d, m.kit, m.phi, m.IF);
  r.bc = find_b_c(m);
  r.b_c = r.bc.b;
  r.cc = coeffs_c(m.phi, m.IF, m.kit, beta, r.b_c);
  r.vc_zero = r.cc.left();

  r.tie_band = kTieRel * beta;
  r.vc_tie_band = kTieRel * (beta + std::abs(m.IF.eval(0.0).value));
  const double d1 = r.vd_prime_zero - beta;
  const double d2 = r.vc_zero;
  if (d1 < -r.tie_band) r.kind = RegimeKind::NoInjection;
  else if (d1 > r.tie_band) r.kind = RegimeKind::Bailout;
  else r.kind = RegimeKind::Indifferent;

  const bool d1_clear = std::abs(d1) > r.tie_band;
  const bool d2_clear = std::abs(d2) > r.vc_tie_band;
  if (d1_clear && d2_clear && ((d1 > 0.0) != (d2 > 0.0))) {
    std::ostringstream os;
    os.precision(17);
    os << "V_d'(0+) - beta = " << d1 << " but V_c(0) = " << d2;
    throw Error(ErrorCode::InconsistentDiscriminants, os.str());
  }
  return r;
}

Jet value_Vd(const ModelSolution& m, const Regime& r, double x) { return J_d(m, r.cd, x); }
Jet value_Vc(const ModelSolution& m, const Regime& r, double x) { return J_c(m, r.cc, x); }

Jet value_V(const ModelSolution& m, const Regime& r, double x) {
  switch (r.kind) {
    case RegimeKind::NoInjection: return value_Vd(m, r, x);
    case RegimeKind::Bailout: return value_Vc(m, r, x);
    case RegimeKind::Indifferent: {
      const Jet a = value_Vd(m, r, x);
      const Jet b = value_Vc(m, r, x);
      return a.value >= b.value ? a : b;
    }
  }
  return value_Vd(m, r, x);
}

double optimal_rate(const ModelSolution& m, const Regime& r, double x) {
  const double b = r.kind == RegimeKind::Bailout ? r.b_c : r.b_d;
  return x >= b ? m.cap.value(x) : 0.0;
}

double hjb_residual(const ModelParams& params, const RateCap& cap, const ValueFn& u,
                    std::span<const double> xs) {
  double worst = 0.0;
  for (double x : xs) {
    const Jet j = u(x);
    const double f = cap.value(x);
    const double diff = params.half_var() * j.d2 + params.mu() * j.d1;
    const double best = std::max(diff, diff - f * j.d1 + f);
    worst = std::max(worst, std::abs(params.q() * j.value - best) / (1.0 + std::abs(j.value)));
  }
  return worst;
}

GrowthBound growth_bound(const ModelSolution& m, const Regime& r) {
  const CapValue f0 = m.cap.eval(0.0);
  const double q = m.params.q();
  const double A = f0.deriv / (q + f0.deriv);
  const double C = std::max(r.vc_zero, (m.params.mu() * A + q * f0.value / (q + f0.deriv)) / q) + 1.0;
  return {A, C};
}

}  // namespace divcap
