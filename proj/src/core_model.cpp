#include "divcap/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace divcap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::NonPositiveQ: return "NonPositiveQ";
    case ErrorCode::BetaNotAboveOne: return "BetaNotAboveOne";
    case ErrorCode::NonFiniteParameter: return "NonFiniteParameter";
    case ErrorCode::BadCoefficients: return "BadCoefficients";
    case ErrorCode::NotConcave: return "NotConcave";
    case ErrorCode::NotNondecreasing: return "NotNondecreasing";
    case ErrorCode::NegativeAtZero: return "NegativeAtZero";
    case ErrorCode::NegativeArgument: return "NegativeArgument";
    case ErrorCode::ArgumentOutOfRange: return "ArgumentOutOfRange";
    case ErrorCode::IntegrationFailed: return "IntegrationFailed";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::NoBracketFound: return "NoBracketFound";
    case ErrorCode::InconsistentDiscriminants: return "InconsistentDiscriminants";
    case ErrorCode::TruncationTooLoose: return "TruncationTooLoose";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

ModelParams validate_params(const RawParams& raw) {
  if (!std::isfinite(raw.mu) || !std::isfinite(raw.sigma) || !std::isfinite(raw.q) ||
      !std::isfinite(raw.beta))
    throw Error(ErrorCode::NonFiniteParameter, "all of mu, sigma, q, beta must be finite");
  if (!(raw.sigma > 0.0))
    throw Error(ErrorCode::NonPositiveSigma, "sigma must be > 0");
  if (!(raw.q > 0.0))
    throw Error(ErrorCode::NonPositiveQ, "q must be > 0");
  if (!(raw.beta > 1.0))
    throw Error(ErrorCode::BetaNotAboveOne, "beta must be > 1");
  return ModelParams(raw.mu, raw.sigma, raw.q, raw.beta);
}

std::string_view to_string(CapKind kind) {
  switch (kind) {
    case CapKind::Constant: return "constant";
    case CapKind::Linear: return "linear";
    case CapKind::Affine: return "affine";
    case CapKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

CapKind parse_cap_kind(std::string_view name) {
  if (name == "constant") return CapKind::Constant;
  if (name == "linear") return CapKind::Linear;
  if (name == "affine") return CapKind::Affine;
  if (name == "tabulated") return CapKind::Tabulated;
  throw Error(ErrorCode::ConfigError, "unknown cap kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ConcaveSpline

namespace {

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

ConcaveSpline::ConcaveSpline(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)) {
  const std::size_t n = xs_.size();
  if (n < 2 || ys.size() != n)
    throw Error(ErrorCode::BadCoefficients, "tabulated cap needs at least two knots");
  if (xs_.front() != 0.0)
    throw Error(ErrorCode::BadCoefficients, "first tabulated knot must be at x = 0");
  if (ys.front() < 0.0)
    throw Error(ErrorCode::NegativeAtZero, "F(0) < 0");

  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = xs_[i + 1] - xs_[i];
    if (!(h > 0.0))
      throw Error(ErrorCode::BadCoefficients, "knot abscissae must be strictly increasing");
    secant[i] = (ys[i + 1] - ys[i]) / h;
    if (secant[i] < 0.0)
      throw Error(ErrorCode::NotNondecreasing, "tabulated values decrease between knots");
    if (i > 0 && secant[i] > secant[i - 1] && !nearly_equal(secant[i], secant[i - 1]))
      throw Error(ErrorCode::NotConcave, "tabulated secant slopes increase");
  }

  // Intervals inside a collinear run (or flat) must be reproduced exactly,
  // which pins both end slopes to the secant.
  const std::size_t m = n - 1;
  std::vector<bool> rigid(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    rigid[i] = secant[i] == 0.0 || (i > 0 && nearly_equal(secant[i], secant[i - 1])) ||
               (i + 1 < m && nearly_equal(secant[i], secant[i + 1]));
  }

  std::vector<double> slope(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) slope[i] = 0.5 * (secant[i - 1] + secant[i]);
  std::vector<int> pinned(n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!rigid[i]) continue;
    for (std::size_t k : {i, i + 1}) {
      if (pinned[k] && !nearly_equal(slope[k], secant[i]))
        throw Error(ErrorCode::BadCoefficients,
                    "knots force a derivative kink; no C1 concave interpolant exists");
      slope[k] = secant[i];
      pinned[k] = 1;
    }
  }
  if (m == 1) {
    slope[0] = slope[1] = secant[0];
  } else {
    if (!pinned[0]) slope[0] = 1.5 * secant[0] - 0.5 * slope[1];
    if (!pinned[n - 1]) slope[n - 1] = std::max(0.0, 1.5 * secant[m - 1] - 0.5 * slope[n - 2]);
  }

  for (std::size_t i = 0; i < m; ++i) {
    const double x0 = xs_[i];
    const double h = xs_[i + 1] - x0;
    const double s0 = slope[i];
    const double s1 = slope[i + 1];
    const double a = s0 - secant[i];
    const double c = secant[i] - s1;
    const double spread = s0 - s1;
    if (std::abs(a) <= 1e-14 * (1.0 + std::abs(s0)) && std::abs(c) <= 1e-14 * (1.0 + std::abs(s1))) {
      breaks_.push_back(x0);
      pieces_.push_back({x0, ys[i], secant[i], 0.0});
      continue;
    }
    if (!(a > 0.0 && c > 0.0))
      throw Error(ErrorCode::BadCoefficients,
                  "knots force a derivative kink; no C1 concave interpolant exists");
    // Split at x0 + t h so the slope runs s0 -> mid -> s1 monotonically.
    const double lo = std::max(0.0, (c - a) / spread);
    const double hi = std::min(1.0, 2.0 * c / spread);
    const double t = 0.5 * (lo + hi);
    const double mid = 2.0 * secant[i] - s1 - t * spread;
    const double w1 = t * h;
    const double w2 = h - w1;
    breaks_.push_back(x0);
    pieces_.push_back({x0, ys[i], s0, (mid - s0) / w1});
    const double ymid = ys[i] + 0.5 * (s0 + mid) * w1;
    breaks_.push_back(x0 + w1);
    pieces_.push_back({x0 + w1, ymid, mid, (s1 - mid) / w2});
  }
  breaks_.push_back(xs_.back());
  pieces_.push_back({xs_.back(), ys.back(), slope.back(), 0.0});
}

CapValue ConcaveSpline::eval(double x) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t k = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
  const Piece& p = pieces_[k];
  const double d = x - p.x0;
  return {p.y0 + p.s0 * d + 0.5 * p.curv * d * d, p.s0 + p.curv * d};
}

// ---------------------------------------------------------------------------
// RateCap

CapValue RateCap::eval_unchecked(double x) const {
  switch (kind_) {
    case CapKind::Constant: return {coeffs_[0], 0.0};
    case CapKind::Linear: return {coeffs_[0] * x, coeffs_[0]};
    case CapKind::Affine: return {coeffs_[0] + coeffs_[1] * x, coeffs_[1]};
    case CapKind::Tabulated: return spline_.eval(x);
  }
  return {0.0, 0.0};
}

CapValue RateCap::eval(double x) const {
  if (x < 0.0 || std::isnan(x)) {
    std::ostringstream os;
    os << "cap evaluated at x = " << x;
    throw Error(ErrorCode::NegativeArgument, os.str());
  }
  return eval_unchecked(x);
}

RateCap make_rate_cap(CapKind kind, std::span<const double> coefficients, std::size_t audit_points) {
  RateCap cap;
  cap.kind_ = kind;
  cap.coeffs_.assign(coefficients.begin(), coefficients.end());
  for (double c : cap.coeffs_)
    if (!std::isfinite(c)) throw Error(ErrorCode::BadCoefficients, "non-finite cap coefficient");

  auto need = [&](std::size_t n) {
    if (cap.coeffs_.size() != n) {
      std::ostringstream os;
      os << to_string(kind) << " cap expects " << n << " coefficient(s), got " << cap.coeffs_.size();
      throw Error(ErrorCode::BadCoefficients, os.str());
    }
  };

  double extent = 50.0;
  switch (kind) {
    case CapKind::Constant: need(1); break;
    case CapKind::Linear: need(1); break;
    case CapKind::Affine: need(2); break;
    case CapKind::Tabulated: {
      if (cap.coeffs_.size() < 4 || cap.coeffs_.size() % 2 != 0)
        throw Error(ErrorCode::BadCoefficients, "tabulated cap expects interleaved (x, y) knot pairs");
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < cap.coeffs_.size(); i += 2) {
        xs.push_back(cap.coeffs_[i]);
        ys.push_back(cap.coeffs_[i + 1]);
      }
      cap.spline_ = ConcaveSpline(std::move(xs), std::move(ys));
      extent = std::max(extent, 2.0 * cap.spline_.last_knot());
      break;
    }
  }
  cap.audit_extent_ = extent;

  const CapValue at0 = cap.eval_unchecked(0.0);
  if (at0.value < 0.0) throw Error(ErrorCode::NegativeAtZero, "F(0) < 0");

  // Shape audit on a dense grid.
  const std::size_t n = std::max<std::size_t>(audit_points, 2);
  CapValue prev = at0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = extent * static_cast<double>(i) / static_cast<double>(n - 1);
    const CapValue cur = cap.eval_unchecked(x);
    const double tol = 1e-12 * (1.0 + std::abs(cur.deriv));
    if (cur.deriv < -tol || cur.value < prev.value - 1e-12 * (1.0 + std::abs(prev.value))) {
      std::ostringstream os;
      os << "F decreases near x = " << x;
      throw Error(ErrorCode::NotNondecreasing, os.str());
    }
    if (cur.deriv > prev.deriv + tol) {
      std::ostringstream os;
      os << "F' increases near x = " << x;
      throw Error(ErrorCode::NotConcave, os.str());
    }
    prev = cur;
  }
  return cap;
}

CapValue cap_eval(const RateCap& cap, double x) { return cap.eval(x); }

}  // namespace divcap
