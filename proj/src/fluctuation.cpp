#include "divcap/fluctuation.hpp"

#include <cmath>
#include <sstream>

namespace divcap {

namespace {

void require_nonnegative(double x) {
  if (x < 0.0 || std::isnan(x)) {
    std::ostringstream os;
    os << "basis function evaluated at x = " << x;
    throw Error(ErrorCode::NegativeArgument, os.str());
  }
}

}  // namespace

FluctuationKit::FluctuationKit(double mu, double sigma, double q) : mu_(mu), sigma_(sigma), q_(q) {
  const double s2 = sigma * sigma;
  delta_ = std::sqrt(mu * mu + 2.0 * q * s2);
  // alpha1 = (-mu + Delta)/s2 loses digits when mu >> 0; use the Vieta
  // product alpha1 alpha2 = -2q/s2 for the small root.
  if (mu >= 0.0) {
    alpha2_ = (-mu - delta_) / s2;
    alpha1_ = -2.0 * q / (s2 * alpha2_);
  } else {
    alpha1_ = (-mu + delta_) / s2;
    alpha2_ = -2.0 * q / (s2 * alpha1_);
  }
}

double FluctuationKit::psi(double x) const {
  return (std::exp(alpha1_ * x) - std::exp(alpha2_ * x)) / delta_;
}

double FluctuationKit::psi_prime(double x) const {
  return (alpha1_ * std::exp(alpha1_ * x) - alpha2_ * std::exp(alpha2_ * x)) / delta_;
}

double FluctuationKit::psi_second(double x) const {
  return (alpha1_ * alpha1_ * std::exp(alpha1_ * x) - alpha2_ * alpha2_ * std::exp(alpha2_ * x)) /
         delta_;
}

double FluctuationKit::psi_bar(double x) const {
  // e^{a1 x}/(a1 D) - e^{a2 x}/(a2 D) - 1/q, written with expm1 so small x is exact.
  return (std::expm1(alpha1_ * x) / alpha1_ - std::expm1(alpha2_ * x) / alpha2_) / delta_;
}

double FluctuationKit::Psi(double x) const {
  return q_ * (std::exp(alpha1_ * x) / alpha1_ - std::exp(alpha2_ * x) / alpha2_) / delta_;
}

double FluctuationKit::Psi_prime(double x) const {
  return q_ * (std::exp(alpha1_ * x) - std::exp(alpha2_ * x)) / delta_;
}

double FluctuationKit::Psi_second(double x) const {
  return q_ * (alpha1_ * std::exp(alpha1_ * x) - alpha2_ * std::exp(alpha2_ * x)) / delta_;
}

double FluctuationKit::Psi_bar_shifted(double x) const {
  return q_ *
         (std::exp(alpha1_ * x) / (alpha1_ * alpha1_) - std::exp(alpha2_ * x) / (alpha2_ * alpha2_)) /
         delta_;
}

double FluctuationKit::Psi_bar(double x) const {
  // int_0^x Psi = q/D [ expm1(a1 x)/a1^2 - expm1(a2 x)/a2^2 ]
  return q_ * (std::expm1(alpha1_ * x) / (alpha1_ * alpha1_) -
               std::expm1(alpha2_ * x) / (alpha2_ * alpha2_)) /
         delta_;
}

double FluctuationKit::log_psi(double x) const {
  // psi(x) = e^{a1 x} (1 - e^{(a2-a1) x}) / D
  return alpha1_ * x + std::log(-std::expm1((alpha2_ - alpha1_) * x)) - std::log(delta_);
}

double FluctuationKit::log_psi_prime(double x) const {
  return alpha1_ * x + std::log(alpha1_ - alpha2_ * std::exp((alpha2_ - alpha1_) * x)) -
         std::log(delta_);
}

double FluctuationKit::log_Psi(double x) const {
  return alpha1_ * x +
         std::log(q_ / (alpha1_ * delta_) - q_ * std::exp((alpha2_ - alpha1_) * x) / (alpha2_ * delta_));
}

double FluctuationKit::Psi_ratio(double x, double b) const { return std::exp(log_Psi(x) - log_Psi(b)); }

double FluctuationKit::psi_ratio(double x, double b) const {
  if (x <= 0.0) return 0.0;
  return std::exp(log_psi(x) - log_psi(b));
}

FluctuationKit build_kit(const ModelParams& params) {
  return FluctuationKit(params.mu(), params.sigma(), params.q());
}

FluctuationKit shifted_kit(const ModelParams& params, double rate) {
  if (rate < 0.0 || std::isnan(rate))
    throw Error(ErrorCode::NegativeArgument, "drift shift must be >= 0");
  return FluctuationKit(params.mu() - rate, params.sigma(), params.q());
}

BasisValues eval_basis(const FluctuationKit& kit, double x) {
  require_nonnegative(x);
  return {kit.psi(x),     kit.psi_prime(x), kit.Psi(x),
          kit.Psi_prime(x), kit.psi_bar(x),   kit.Psi_bar(x)};
}

ValueAndSlope u_zero_b(const FluctuationKit& kit, double x, double b) {
  if (!(b > 0.0) || x < 0.0 || x > b) {
    std::ostringstream os;
    os << "u_{0,b} needs 0 <= x <= b and b > 0, got x = " << x << ", b = " << b;
    throw Error(ErrorCode::ArgumentOutOfRange, os.str());
  }
  const double ratio = kit.Psi_ratio(x, b);
  const double tail_b = kit.Psi_bar_shifted(b);
  const double value = ratio * tail_b - kit.Psi_bar_shifted(x);
  // d/dx: Psi'(x)/Psi(b) * tail_b - Psi(x)
  const double deriv = kit.Psi_prime(x) / kit.Psi(b) * tail_b - kit.Psi(x);
  return {value, deriv};
}

}  // namespace divcap
