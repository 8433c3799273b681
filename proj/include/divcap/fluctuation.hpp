#pragma once

#include "divcap/core_model.hpp"

namespace divcap {

/// Closed-form scale functions of a Brownian motion with drift killed at rate q.
///
/// With Delta = sqrt(mu^2 + 2 q sigma^2) and alpha1 > 0 > alpha2 the roots of
/// (sigma^2/2) a^2 + mu a - q = 0:
///
///   psi(x)     = (e^{a1 x} - e^{a2 x}) / Delta
///   psi_bar(x) = int_0^x psi
///   Psi(x)     = 1 + q psi_bar(x)
///   Psi_bar(x) = int_0^x Psi
///
/// psi, Psi and Psi_bar + mu/q solve (sigma^2/2) v'' + mu v' - q v = 0.
class FluctuationKit {
public:
  FluctuationKit(double mu, double sigma, double q);

  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double q() const noexcept { return q_; }
  double delta() const noexcept { return delta_; }
  double alpha1() const noexcept { return alpha1_; }
  double alpha2() const noexcept { return alpha2_; }

  double psi(double x) const;
  double psi_prime(double x) const;
  double psi_second(double x) const;
  double psi_bar(double x) const;

  double Psi(double x) const;
  double Psi_prime(double x) const;
  double Psi_second(double x) const;

  double Psi_bar(double x) const;
  /// Psi_bar(x) + mu/q, evaluated without the cancellation in Psi_bar.
  double Psi_bar_shifted(double x) const;

  // Log-scaled variants for arguments where e^{alpha1 x} overflows.
  double log_psi(double x) const;
  double log_psi_prime(double x) const;
  double log_Psi(double x) const;

  /// Psi(x)/Psi(b), the Laplace transform of the upward passage time of the
  /// process reflected at zero. Finite for all x <= b.
  double Psi_ratio(double x, double b) const;
  /// psi(x)/psi(b).
  double psi_ratio(double x, double b) const;

private:
  double mu_, sigma_, q_;
  double delta_, alpha1_, alpha2_;
};

struct BasisValues {
  double psi, psi_prime, Psi, Psi_prime, psi_bar, Psi_bar;
};

FluctuationKit build_kit(const ModelParams& params);

/// Kit for the same volatility and discounting but drift mu - rate.
FluctuationKit shifted_kit(const ModelParams& params, double rate);

BasisValues eval_basis(const FluctuationKit& kit, double x);

struct ValueAndSlope {
  double value;
  double deriv;
};

/// Expected discounted injections of the reflected process before it
/// reaches b:  u_{0,b}(x) = Psi(x)/Psi(b) (Psi_bar(b) + mu/q) - (Psi_bar(x) + mu/q).
ValueAndSlope u_zero_b(const FluctuationKit& kit, double x, double b);

}  // namespace divcap
