#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace divcap {

enum class ErrorCode {
  NonPositiveSigma,
  NonPositiveQ,
  BetaNotAboveOne,
  NonFiniteParameter,
  BadCoefficients,
  NotConcave,
  NotNondecreasing,
  NegativeAtZero,
  NegativeArgument,
  ArgumentOutOfRange,
  IntegrationFailed,
  DomainTooSmall,
  OutOfDomain,
  SingularDenominator,
  NoBracketFound,
  InconsistentDiscriminants,
  TruncationTooLoose,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. The code names the violated constraint.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

struct RawParams {
  double mu = 0.0;
  double sigma = 0.0;
  double q = 0.0;
  double beta = 0.0;
};

/// Drift, volatility, discount rate and injection cost of the surplus model.
/// Only obtainable through validate_params, so every instance satisfies
/// sigma > 0, q > 0, beta > 1.
class ModelParams {
public:
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double q() const noexcept { return q_; }
  double beta() const noexcept { return beta_; }
  double half_var() const noexcept { return 0.5 * sigma_ * sigma_; }

  friend ModelParams validate_params(const RawParams& raw);

private:
  ModelParams(double mu, double sigma, double q, double beta)
      : mu_(mu), sigma_(sigma), q_(q), beta_(beta) {}
  double mu_, sigma_, q_, beta_;
};

ModelParams validate_params(const RawParams& raw);

enum class CapKind { Constant, Linear, Affine, Tabulated };

std::string_view to_string(CapKind kind);
CapKind parse_cap_kind(std::string_view name);

struct CapValue {
  double value;
  double deriv;
};

/// Shape-preserving C1 quadratic spline through monotone concave knots,
/// extended affinely past the last knot.
class ConcaveSpline {
public:
  ConcaveSpline() = default;
  ConcaveSpline(std::vector<double> xs, std::vector<double> ys);

  CapValue eval(double x) const;
  double first_knot() const { return xs_.front(); }
  double last_knot() const { return xs_.back(); }

private:
  struct Piece {
    double x0, y0, s0, curv;  // y = y0 + s0 (x-x0) + curv (x-x0)^2 / 2
  };
  std::vector<double> xs_;
  std::vector<double> breaks_;
  std::vector<Piece> pieces_;
};

/// Dividend-rate bound F: nondecreasing, concave, C1, F(0) >= 0.
class RateCap {
public:
  CapKind kind() const noexcept { return kind_; }
  const std::vector<double>& coefficients() const noexcept { return coeffs_; }

  /// (F(x), F'(x)); throws NegativeArgument for x < 0.
  CapValue eval(double x) const;
  double value(double x) const { return eval(x).value; }
  double deriv(double x) const { return eval(x).deriv; }

  /// Domain over which the shape audit ran.
  double audit_extent() const noexcept { return audit_extent_; }

  friend RateCap make_rate_cap(CapKind kind, std::span<const double> coefficients,
                               std::size_t audit_points);

private:
  RateCap() = default;
  CapValue eval_unchecked(double x) const;

  CapKind kind_ = CapKind::Constant;
  std::vector<double> coeffs_;
  ConcaveSpline spline_;
  double audit_extent_ = 0.0;
};

inline constexpr std::size_t kDefaultCapAuditPoints = 10000;

/// Builds and certifies a cap. Coefficients by kind:
///   Constant: {S}; Linear: {K}; Affine: {c0, c1};
///   Tabulated: interleaved knots {x0, y0, x1, y1, ...} with x0 = 0.
RateCap make_rate_cap(CapKind kind, std::span<const double> coefficients,
                      std::size_t audit_points = kDefaultCapAuditPoints);

CapValue cap_eval(const RateCap& cap, double x);

}  // namespace divcap
