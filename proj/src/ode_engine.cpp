#include "divcap/ode_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "divcap/csv.hpp"

namespace divcap {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kXmaxFloor = 20.0;
constexpr double kXmaxCap = 1e4;
constexpr double kFarFieldDecay = 1e-10;

// Decreasing root of (s^2/2) t^2 + (mu - F) t - q = 0.
double theta2(double drift, double sigma, double q) {
  const double s2 = sigma * sigma;
  const double disc = std::sqrt(drift * drift + 2.0 * q * s2);
  // Negative root of (s2/2) t^2 + drift t - q; the Vieta form avoids
  // cancellation when drift < 0.
  return drift >= 0.0 ? (-drift - disc) / s2 : -2.0 * q / (disc - drift);
}

double root_gap(double drift, double sigma, double q) {
  return 2.0 * std::sqrt(drift * drift + 2.0 * q * sigma * sigma) / (sigma * sigma);
}

template <class State>
auto make_stepper(double tol) {
  return odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
}

}  // namespace

struct OdeSolverAccess {
  static OdeSolution blank(SolutionKind kind, const ModelParams& p, const RateCap& c) {
    return OdeSolution(kind, p, c);
  }
  static OdeSolution& fill(OdeSolution& s, std::vector<double> grid, std::vector<double> v,
                           std::vector<double> d1) {
    s.grid_ = std::move(grid);
    s.values_ = std::move(v);
    s.derivs_ = std::move(d1);
    return s;
  }
  static void set_log(OdeSolution& s, std::vector<double> lv, std::vector<double> l1,
                      std::vector<double> l2) {
    s.log_values_ = std::move(lv);
    s.log_d1_ = std::move(l1);
    s.log_d2_ = std::move(l2);
  }
  static void set_attenuation(OdeSolution& s, double a) { s.attenuation_ = a; }
  static void finalize(OdeSolution& s) { s.finalize(); }
};

// ---------------------------------------------------------------------------
// OdeSolution

double OdeSolution::source(double x) const {
  return kind_ == SolutionKind::IF ? cap_.value(x) : 0.0;
}

double OdeSolution::ode_second(double x, double value, double d1) const {
  const CapValue f = cap_.eval(x);
  const double src = kind_ == SolutionKind::IF ? f.value : 0.0;
  return (params_.q() * value - (params_.mu() - f.value) * d1 - src) / params_.half_var();
}

void OdeSolution::check_domain(double x) const {
  const double hi = grid_.back();
  if (!(x >= 0.0) || x > hi * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "x = " << x << " outside [0, " << hi << "]";
    throw Error(ErrorCode::OutOfDomain, os.str());
  }
}

std::size_t OdeSolution::cell(double x) const { return locate_interval(grid_, x); }

Jet OdeSolution::interpolate(double x) const {
  check_domain(x);
  const std::size_t k = cell(x);
  const Jet left{values_[k], derivs_[k], seconds_[k]};
  const Jet right{values_[k + 1], derivs_[k + 1], seconds_[k + 1]};
  return quintic_hermite(grid_[k], grid_[k + 1], left, right, std::min(x, grid_.back()));
}

Jet OdeSolution::eval(double x) const {
  Jet j = interpolate(x);
  j.d2 = ode_second(std::min(x, grid_.back()), j.value, j.d1);
  return j;
}

double OdeSolution::log_slope(double x) const {
  if (kind_ != SolutionKind::Phi) throw Error(ErrorCode::ArgumentOutOfRange, "log_slope needs Phi");
  check_domain(x);
  const std::size_t k = cell(x);
  const Jet left{log_values_[k], log_d1_[k], log_d2_[k]};
  const Jet right{log_values_[k + 1], log_d1_[k + 1], log_d2_[k + 1]};
  return quintic_hermite(grid_[k], grid_[k + 1], left, right, std::min(x, grid_.back())).d1;
}

double OdeSolution::ratio(double x, double y) const {
  if (kind_ != SolutionKind::Phi) throw Error(ErrorCode::ArgumentOutOfRange, "ratio needs Phi");
  check_domain(x);
  check_domain(y);
  auto logv = [&](double z) {
    z = std::min(z, grid_.back());
    const std::size_t k = cell(z);
    const Jet left{log_values_[k], log_d1_[k], log_d2_[k]};
    const Jet right{log_values_[k + 1], log_d1_[k + 1], log_d2_[k + 1]};
    return quintic_hermite(grid_[k], grid_[k + 1], left, right, z).value;
  };
  return std::exp(logv(x) - logv(y));
}

void OdeSolution::finalize() {
  const std::size_t n = grid_.size();
  seconds_.resize(n);
  for (std::size_t i = 0; i < n; ++i) seconds_[i] = ode_second(grid_[i], values_[i], derivs_[i]);
  if (kind_ == SolutionKind::Phi && log_values_.size() != n) {
    log_values_.resize(n);
    log_d1_.resize(n);
    log_d2_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = values_[i];
      log_values_[i] = std::log(v);
      log_d1_[i] = derivs_[i] / v;
      log_d2_[i] = seconds_[i] / v - log_d1_[i] * log_d1_[i];
    }
  }
  boundary_defect_ =
      kind_ == SolutionKind::Phi ? std::abs(values_.front() - 1.0) : std::abs(derivs_.front());
  residual_sup_ = ode_residual(*this);
}

OdeSolution OdeSolution::from_grid(SolutionKind kind, const ModelParams& params, const RateCap& cap,
                                   std::vector<double> grid, std::vector<double> values,
                                   std::vector<double> derivs) {
  const std::size_t n = grid.size();
  if (n < 2 || values.size() != n || derivs.size() != n)
    throw Error(ErrorCode::ArgumentOutOfRange, "grid, values and derivs must share a length >= 2");
  if (grid.front() != 0.0)
    throw Error(ErrorCode::ArgumentOutOfRange, "solution grid must start at 0");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(grid[i + 1] > grid[i]))
      throw Error(ErrorCode::ArgumentOutOfRange, "solution grid must be strictly increasing");
  OdeSolution s(kind, params, cap);
  s.grid_ = std::move(grid);
  s.values_ = std::move(values);
  s.derivs_ = std::move(derivs);
  s.attenuation_ = 0.0;
  s.finalize();
  return s;
}

OdeSolution OdeSolution::shifted(double lambda, const OdeSolution& phi) const {
  if (kind_ != SolutionKind::IF || phi.kind() != SolutionKind::Phi)
    throw Error(ErrorCode::ArgumentOutOfRange, "shift needs an IF solution and a Phi solution");
  OdeSolution s = *this;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const Jet p = phi.interpolate(std::min(grid_[i], phi.x_max()));
    s.values_[i] += lambda * p.value;
    s.derivs_[i] += lambda * p.d1;
  }
  s.finalize();
  return s;
}

// ---------------------------------------------------------------------------
// Solver

double default_x_max(const ModelParams& params, const RateCap& cap) {
  // Growing caps only give polynomial decay; the far field error is damped by
  // the attenuation factor instead, so the floor is enough.
  if (cap.eval(kXmaxCap).deriv > 0.0) return kXmaxFloor;
  // log phi(x) ~ int_0^x theta2; walk out until that reaches the decay target.
  const double target = std::log(kFarFieldDecay);
  auto t2 = [&](double x) { return theta2(params.mu() - cap.value(x), params.sigma(), params.q()); };
  double x = 0.0, acc = 0.0, prev = t2(0.0);
  while (x < kXmaxCap) {
    const double h = std::max(0.05, 0.01 * x);
    const double cur = t2(x + h);
    acc += 0.5 * h * (prev + cur);
    x += h;
    prev = cur;
    if (acc < target) return std::max(x, kXmaxFloor);
  }
  return kXmaxFloor;
}

std::vector<double> make_grid(double x_max, std::size_t n) {
  std::vector<double> g(n);
  const double a = std::min(5.0, x_max);
  const double span = std::asinh(x_max / a);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n - 1);
    g[i] = a * std::sinh(u * span);
  }
  g.front() = 0.0;
  g.back() = x_max;
  return g;
}

namespace {

void validate_options(const OdeOptions& o) {
  if (!(o.tol > 0.0) || !std::isfinite(o.tol))
    throw Error(ErrorCode::ConfigError, "numerics.tol must be > 0");
  if (!(o.residual_tol > 0.0))
    throw Error(ErrorCode::ConfigError, "numerics.residual_tol must be > 0");
  if (o.grid_n < 16) throw Error(ErrorCode::ConfigError, "numerics.grid_n must be >= 16");
  if (o.x_max < 0.0 || !std::isfinite(o.x_max))
    throw Error(ErrorCode::ConfigError, "numerics.x_max must be >= 0 (0 = automatic)");
}

struct BackwardNodes {
  std::vector<double> r, p;  // indexed like the x grid
};

// Integrates (r, p) from x_max down to 0 in s = x_max - x, where
//   r = phi'/phi, p = I' - r I.
// Both Riccati and p directions are contracting when run toward 0.
BackwardNodes backward_pass(const ModelParams& prm, const RateCap& cap, const std::vector<double>& grid,
                            double tol) {
  using State = std::array<double, 2>;
  const double x_max = grid.back();
  const double mu = prm.mu(), q = prm.q(), hv = prm.half_var();

  auto rhs = [&](const State& y, State& dy, double s) {
    const double x = std::max(0.0, x_max - s);
    const double f = cap.value(x);
    const double drift = mu - f;
    const double r = y[0], p = y[1];
    dy[0] = -((q - drift * r) / hv - r * r);
    dy[1] = (r + drift / hv) * p + f / hv;
  };

  // Far-field start: local constant-cap root for r; exact affine-tangent
  // particular solution a + c x for I, which makes p exact for affine caps.
  const CapValue fx = cap.eval(x_max);
  const double r0 = theta2(mu - fx.value, prm.sigma(), q);
  const double c1 = fx.deriv;
  const double c0 = fx.value - c1 * x_max;
  const double c = c1 / (c1 + q);
  const double a = ((mu - c0) * c + c0) / q;
  State y{r0, c - r0 * (a + c * x_max)};

  const std::size_t n = grid.size();
  std::vector<double> times(n);
  for (std::size_t j = 0; j < n; ++j) times[j] = x_max - grid[n - 1 - j];
  times.front() = 0.0;

  BackwardNodes out;
  out.r.resize(n);
  out.p.resize(n);
  std::size_t idx = 0;
  auto observe = [&](const State& st, double) {
    const std::size_t i = n - 1 - idx++;
    out.r[i] = st[0];
    out.p[i] = st[1];
  };
  try {
    odeint::integrate_times(make_stepper<State>(tol), rhs, y, times.begin(), times.end(),
                            std::min(1e-3, times[1]), observe);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IntegrationFailed, std::string("backward pass: ") + e.what());
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(out.r[i]) || !std::isfinite(out.p[i]) ||
        !(out.r[i] < 0.0))
      throw Error(ErrorCode::IntegrationFailed, "backward pass produced an invalid state");
  return out;
}

}  // namespace

SolvedPair solve_pair(const ModelParams& prm, const RateCap& cap, const OdeOptions& opts) {
  validate_options(opts);
  const double x_max = opts.x_max > 0.0 ? opts.x_max : default_x_max(prm, cap);
  const std::vector<double> grid = make_grid(x_max, opts.grid_n);
  const std::size_t n = grid.size();
  const double mu = prm.mu(), q = prm.q(), hv = prm.half_var();

  // Damping of the far-field error by the time it reaches x = 0.
  double gap_integral = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double g0 = root_gap(mu - cap.value(grid[i]), prm.sigma(), q);
    const double g1 = root_gap(mu - cap.value(grid[i + 1]), prm.sigma(), q);
    gap_integral += 0.5 * (g0 + g1) * (grid[i + 1] - grid[i]);
  }
  const double attenuation = std::exp(-gap_integral);
  if (attenuation > opts.far_field_tol) {
    std::ostringstream os;
    os << "x_max = " << x_max << " damps the far-field error only by " << attenuation;
    throw Error(ErrorCode::DomainTooSmall, os.str());
  }

  const double integ_tol = opts.tol * 1e-5;
  BackwardNodes bw = backward_pass(prm, cap, grid, integ_tol);

  // Node jets of r and p for quintic interpolation in the forward pass.
  std::vector<double> r1(n), r2(n), p1(n), p2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CapValue f = cap.eval(grid[i]);
    const double drift = mu - f.value;
    const double r = bw.r[i], p = bw.p[i];
    r1[i] = (q - drift * r) / hv - r * r;
    r2[i] = (f.deriv * r - drift * r1[i]) / hv - 2.0 * r * r1[i];
    p1[i] = -(r + drift / hv) * p - f.value / hv;
    p2[i] = -(r1[i] - f.deriv / hv) * p - (r + drift / hv) * p1[i] - f.deriv / hv;
  }
  auto rp_at = [&](double x) {
    const std::size_t k = locate_interval(grid, x);
    const double r = quintic_hermite(grid[k], grid[k + 1], {bw.r[k], r1[k], r2[k]},
                                     {bw.r[k + 1], r1[k + 1], r2[k + 1]}, x)
                         .value;
    const double p = quintic_hermite(grid[k], grid[k + 1], {bw.p[k], p1[k], p2[k]},
                                     {bw.p[k + 1], p1[k + 1], p2[k + 1]}, x)
                         .value;
    return std::pair{r, p};
  };

  // Forward pass, one cell at a time on the quintic interpolants of r and p:
  //   L(x1) = L(x0) + int r,   I(x1) = e^{R} (I(x0) + int e^{-R(s)} p(s) ds),
  // with R(s) = int_{x0}^{s} r. Gauss rules make the L step exact for the
  // quintic, so node values agree with the node derivatives to rounding and
  // the interpolant's curvature only reflects the integrator error in r, p.
  static constexpr std::array<double, 4> g4x{-0.8611363115940526, -0.3399810435848563,
                                             0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> g4w{0.3478548451374538, 0.6521451548625461,
                                             0.6521451548625461, 0.3478548451374538};
  static constexpr std::array<double, 8> g8x{-0.9602898564975363, -0.7966664774136267,
                                             -0.5255324099163290, -0.1834346424956498,
                                             0.1834346424956498,  0.5255324099163290,
                                             0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> g8w{0.1012285362903763, 0.2223810344533745,
                                             0.3137066458778873, 0.3626837833783620,
                                             0.3626837833783620, 0.3137066458778873,
                                             0.2223810344533745, 0.1012285362903763};
  auto int_r = [&](double a, double b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 4; ++j) acc += g4w[j] * rp_at(0.5 * (a + b) + 0.5 * (b - a) * g4x[j]).first;
    return 0.5 * (b - a) * acc;
  };

  std::vector<double> I(n), L(n);
  I[0] = -bw.p[0] / bw.r[0];
  L[0] = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = grid[i], b = grid[i + 1];
    const double R = int_r(a, b);
    double src = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      const double s = 0.5 * (a + b) + 0.5 * (b - a) * g8x[j];
      src += g8w[j] * std::exp(-int_r(a, s)) * rp_at(s).second;
    }
    src *= 0.5 * (b - a);
    L[i + 1] = L[i] + R;
    I[i + 1] = std::exp(R) * (I[i] + src);
  }

  std::vector<double> phi(n), dphi(n), lv(n), l1(n), l2(n), dI(n);
  for (std::size_t i = 0; i < n; ++i) {
    lv[i] = L[i];
    l1[i] = bw.r[i];
    l2[i] = r1[i];
    phi[i] = std::exp(lv[i]);
    dphi[i] = bw.r[i] * phi[i];
    if (!std::isfinite(I[i]))
      throw Error(ErrorCode::IntegrationFailed, "forward pass produced a non-finite value");
    dI[i] = bw.r[i] * I[i] + bw.p[i];
  }

  OdeSolution phi_sol = OdeSolverAccess::blank(SolutionKind::Phi, prm, cap);
  OdeSolverAccess::fill(phi_sol, grid, std::move(phi), std::move(dphi));
  OdeSolverAccess::set_log(phi_sol, std::move(lv), std::move(l1), std::move(l2));
  OdeSolverAccess::set_attenuation(phi_sol, attenuation);
  OdeSolverAccess::finalize(phi_sol);

  OdeSolution if_sol = OdeSolverAccess::blank(SolutionKind::IF, prm, cap);
  OdeSolverAccess::fill(if_sol, grid, std::move(I), std::move(dI));
  OdeSolverAccess::set_attenuation(if_sol, attenuation);
  OdeSolverAccess::finalize(if_sol);

  return {std::move(phi_sol), std::move(if_sol)};
}

OdeSolution solve_phi(const ModelParams& params, const RateCap& cap, const OdeOptions& opts) {
  return solve_pair(params, cap, opts).phi;
}

OdeSolution solve_IF(const ModelParams& params, const RateCap& cap, const OdeOptions& opts) {
  return solve_pair(params, cap, opts).IF;
}

SolutionJet eval_solution(const OdeSolution& sol, double x) {
  const Jet j = sol.eval(x);
  return {j.value, j.d1, j.d2};
}

double ode_residual(const OdeSolution& sol) {
  const auto grid = sol.grid();
  const ModelParams& prm = sol.params();
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    for (double t : {0.25, 0.5, 0.75}) {
      const double x = grid[k] + t * (grid[k + 1] - grid[k]);
      const Jet j = sol.interpolate(x);
      const double f = sol.cap().value(x);
      const double lhs = prm.half_var() * j.d2 + (prm.mu() - f) * j.d1 - prm.q() * j.value +
                         sol.source(x);
      worst = std::max(worst, std::abs(lhs) / (1.0 + std::abs(j.value)));
    }
  }
  return worst;
}

void write_solution_csv(const OdeSolution& sol, std::ostream& out) {
  out << "x,value,deriv\n";
  const auto g = sol.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    write_row(out, {format_double(g[i]), format_double(sol.values()[i]),
                    format_double(sol.derivs()[i])});
}

}  // namespace divcap
