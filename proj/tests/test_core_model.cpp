#include <doctest.h>

#include <limits>

#include "support.hpp"

using namespace divcap;
using namespace divcap::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

}  // namespace

TEST_CASE("validate_params accepts and rejects the listed records") {
  const ModelParams p = validate_params({0.0, std::sqrt(2.0), 1.0, 1.5});
  CHECK(p.sigma() == doctest::Approx(std::sqrt(2.0)));
  CHECK(p.half_var() == doctest::Approx(1.0));
  CHECK(code_of([] { validate_params({1, 0, 1, 2}); }) == ErrorCode::NonPositiveSigma);
  CHECK(code_of([] { validate_params({1, 1, 1, 1}); }) == ErrorCode::BetaNotAboveOne);
  CHECK(code_of([] { validate_params({1, 1, 0, 2}); }) == ErrorCode::NonPositiveQ);
  CHECK(code_of([] { validate_params({1, -1, 1, 2}); }) == ErrorCode::NonPositiveSigma);
  CHECK(code_of([] { validate_params({std::nan(""), 1, 1, 2}); }) == ErrorCode::NonFiniteParameter);
  CHECK(code_of([] { validate_params({1, 1, std::numeric_limits<double>::infinity(), 2}); }) ==
        ErrorCode::NonFiniteParameter);
}

TEST_CASE("make_rate_cap examples") {
  const RateCap c = constant(1.0);
  for (double x : {0.0, 0.5, 5.0, 100.0}) {
    CHECK(c.value(x) == 1.0);
    CHECK(c.deriv(x) == 0.0);
  }
  const RateCap l = linear(0.5);
  CHECK(l.value(2.0) == 1.0);
  CHECK(l.deriv(2.0) == 0.5);
  CHECK(code_of([] { affine(1.0, -0.1); }) == ErrorCode::NotNondecreasing);
  CHECK(code_of([] { affine(-0.1, 1.0); }) == ErrorCode::NegativeAtZero);
  CHECK(code_of([] { constant(std::nan("")); }) == ErrorCode::BadCoefficients);
  const std::array<double, 3> three{1, 2, 3};
  CHECK(code_of([&] { make_rate_cap(CapKind::Affine, three); }) == ErrorCode::BadCoefficients);
  CHECK(parse_cap_kind("tabulated") == CapKind::Tabulated);
  CHECK(code_of([] { parse_cap_kind("cubic"); }) == ErrorCode::ConfigError);
}

TEST_CASE("cap_eval examples") {
  const CapValue c = cap_eval(constant(1.0), 5.0);
  CHECK(c.value == 1.0);
  CHECK(c.deriv == 0.0);
  const CapValue l = cap_eval(linear(0.5), 0.0);
  CHECK(l.value == 0.0);
  CHECK(l.deriv == 0.5);
  CHECK(code_of([] { cap_eval(linear(0.5), -1.0); }) == ErrorCode::NegativeArgument);
}

TEST_CASE("tabulated cap rejects non-concave and decreasing tables") {
  const std::vector<double> convex{0, 0, 1, 1, 2, 3};
  CHECK(code_of([&] { make_rate_cap(CapKind::Tabulated, convex); }) == ErrorCode::NotConcave);
  const std::vector<double> down{0, 1, 1, 0.5};
  CHECK(code_of([&] { make_rate_cap(CapKind::Tabulated, down); }) == ErrorCode::NotNondecreasing);
  const std::vector<double> odd{0, 1, 1};
  CHECK(code_of([&] { make_rate_cap(CapKind::Tabulated, odd); }) == ErrorCode::BadCoefficients);
  const std::vector<double> shifted{0.5, 1, 1, 2};
  CHECK(code_of([&] { make_rate_cap(CapKind::Tabulated, shifted); }) == ErrorCode::BadCoefficients);
}

TEST_CASE("tabulated cap on collinear knots reproduces the line") {
  const std::vector<double> knots{0, 0.5, 1, 1.0, 3, 2.0};
  const RateCap c = make_rate_cap(CapKind::Tabulated, knots);
  for (double x : {0.0, 0.3, 1.0, 2.2, 3.0, 7.0}) {
    CHECK(c.value(x) == doctest::Approx(0.5 + 0.5 * x).epsilon(1e-13));
    CHECK(c.deriv(x) == doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("property: tabulated cap interpolates knots and stays monotone, concave and C1") {
  Gen g(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::vector<double> k = g.concave_knots(g.integer(2, 7));
    const RateCap c = make_rate_cap(CapKind::Tabulated, k);
    for (std::size_t i = 0; i < k.size(); i += 2) CHECK(c.value(k[i]) == doctest::Approx(k[i + 1]).epsilon(1e-12));
    const double end = 1.5 * k[k.size() - 2];
    double prev_v = c.value(0.0), prev_d = c.deriv(0.0);
    const int n = 3000;
    for (int i = 1; i <= n; ++i) {
      const double x = end * i / n;
      const CapValue v = c.eval(x);
      REQUIRE(v.deriv >= -1e-12);
      REQUIRE(v.value >= prev_v - 1e-12);
      REQUIRE(v.deriv <= prev_d + 1e-12);
      // No slope jump larger than the grid resolution allows.
      REQUIRE(std::abs(v.deriv - prev_d) < 0.05 + 1e-9);
      prev_v = v.value;
      prev_d = v.deriv;
    }
  }
}

TEST_CASE("property: affine caps with nonnegative coefficients are certified") {
  Gen g(5);
  for (int i = 0; i < 50; ++i) {
    const double c0 = g.uniform(0, 3), c1 = g.uniform(0, 3);
    const RateCap c = affine(c0, c1);
    const double x = g.uniform(0, 40);
    CHECK(c.value(x) == doctest::Approx(c0 + c1 * x));
    CHECK(c.deriv(x) == doctest::Approx(c1));
  }
}
