#include <doctest.h>

#include "divcap/fluctuation.hpp"
#include "support.hpp"

using namespace divcap;
using namespace divcap::testing;

TEST_CASE("build_kit examples") {
  const FluctuationKit k = build_kit(params(0.0, std::sqrt(2.0), 1.0, 1.5));
  CHECK(k.delta() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(k.alpha1() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k.alpha2() == doctest::Approx(-1.0).epsilon(1e-15));

  const FluctuationKit k2 = build_kit(params(1.0, 1.0, 0.5, 1.5));
  CHECK(k2.delta() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(k2.alpha1() == doctest::Approx(-1.0 + std::sqrt(2.0)).epsilon(1e-14));
  CHECK(k2.alpha2() == doctest::Approx(-1.0 - std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("property: Vieta product and root signs") {
  Gen g(1);
  for (int i = 0; i < 200; ++i) {
    const ModelParams p = g.params();
    const FluctuationKit k = build_kit(p);
    const double s2 = p.sigma() * p.sigma();
    CHECK(k.alpha1() * k.alpha2() == doctest::Approx(-2.0 * p.q() / s2).epsilon(1e-13));
    CHECK(k.alpha1() > 0.0);
    CHECK(k.alpha2() < 0.0);
    CHECK(k.alpha1() - k.alpha2() == doctest::Approx(2.0 * k.delta() / s2).epsilon(1e-13));
  }
}

TEST_CASE("Vieta-stable roots survive large drift") {
  const FluctuationKit k(1e6, 1.0, 1.0);
  // alpha1 ~ q/mu; the naive (-mu + Delta)/s2 would cancel to zero.
  CHECK(k.alpha1() == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("eval_basis: sinh and cosh at mu = 0, sigma^2 = 2, q = 1") {
  const FluctuationKit k = build_kit(params(0.0, std::sqrt(2.0), 1.0, 1.5));
  for (double x : {0.0, 0.1, 0.7, 2.0, 5.0}) {
    const BasisValues b = eval_basis(k, x);
    CHECK(b.psi == doctest::Approx(std::sinh(x)).epsilon(1e-13));
    CHECK(b.Psi == doctest::Approx(std::cosh(x)).epsilon(1e-13));
    CHECK(b.Psi_bar == doctest::Approx(std::sinh(x)).epsilon(1e-13));
    CHECK(b.psi_prime == doctest::Approx(std::cosh(x)).epsilon(1e-13));
    CHECK(b.Psi_prime == doctest::Approx(std::sinh(x)).epsilon(1e-13));
  }
}

TEST_CASE("property: basis values at zero") {
  Gen g(2);
  for (int i = 0; i < 100; ++i) {
    const ModelParams p = g.params();
    const BasisValues b = eval_basis(build_kit(p), 0.0);
    CHECK(b.psi == 0.0);
    CHECK(b.Psi == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.psi_prime == doctest::Approx(2.0 / (p.sigma() * p.sigma())).epsilon(1e-13));
    CHECK(std::abs(b.Psi_prime) < 1e-15);
    CHECK(b.psi_bar == 0.0);
  }
  CHECK_THROWS_AS(eval_basis(build_kit(params(1, 1, 1, 2)), -0.1), Error);
}

TEST_CASE("property: basis functions solve the killed generator equation") {
  Gen g(3);
  for (int i = 0; i < 50; ++i) {
    const ModelParams p = g.params();
    const FluctuationKit k = build_kit(p);
    const double hv = p.half_var(), mu = p.mu(), q = p.q();
    for (int j = 0; j <= 20; ++j) {
      const double x = 3.0 * j / 20.0;
      const double rp = hv * k.psi_second(x) + mu * k.psi_prime(x) - q * k.psi(x);
      const double rP = hv * k.Psi_second(x) + mu * k.Psi_prime(x) - q * k.Psi(x);
      const double rB = hv * k.Psi_prime(x) + mu * k.Psi(x) - q * k.Psi_bar_shifted(x);
      CHECK(std::abs(rp) <= 1e-11 * (1 + std::abs(k.psi(x)) + std::abs(k.psi_second(x))));
      CHECK(std::abs(rP) <= 1e-11 * (1 + std::abs(k.Psi(x)) + std::abs(k.Psi_second(x))));
      CHECK(std::abs(rB) <= 1e-11 * (1 + std::abs(k.Psi_bar_shifted(x)) + std::abs(k.Psi_prime(x))));
      CHECK(k.Psi_bar_shifted(x) == doctest::Approx(k.Psi_bar(x) + mu / q).epsilon(1e-10));
    }
  }
}

TEST_CASE("log-scaled variants match direct evaluation") {
  Gen g(4);
  for (int i = 0; i < 50; ++i) {
    const FluctuationKit k = build_kit(g.params());
    const double x = g.uniform(0.01, 5.0), b = x + g.uniform(0.0, 3.0);
    CHECK(k.log_psi(x) == doctest::Approx(std::log(k.psi(x))).epsilon(1e-12));
    CHECK(k.log_psi_prime(x) == doctest::Approx(std::log(k.psi_prime(x))).epsilon(1e-12));
    CHECK(k.log_Psi(x) == doctest::Approx(std::log(k.Psi(x))).epsilon(1e-12));
    CHECK(k.Psi_ratio(x, b) == doctest::Approx(k.Psi(x) / k.Psi(b)).epsilon(1e-12));
    CHECK(k.psi_ratio(x, b) == doctest::Approx(k.psi(x) / k.psi(b)).epsilon(1e-12));
  }
  // Far past overflow of e^{alpha1 x} the ratio is still finite.
  const FluctuationKit k(1.0, 1.0, 1.0);
  CHECK(std::isfinite(k.Psi_ratio(1500.0, 1501.0)));
  CHECK(k.Psi_ratio(1500.0, 1501.0) == doctest::Approx(std::exp(-k.alpha1())).epsilon(1e-9));
}

TEST_CASE("u_zero_b closed form at mu = 0, sigma^2 = 2, q = 1") {
  const FluctuationKit k = build_kit(params(0.0, std::sqrt(2.0), 1.0, 1.5));
  for (double b : {0.3, 1.0, 2.5}) {
    for (int j = 0; j <= 10; ++j) {
      const double x = b * j / 10.0;
      const ValueAndSlope u = u_zero_b(k, x, b);
      CHECK(u.value == doctest::Approx(std::cosh(x) * std::tanh(b) - std::sinh(x)).epsilon(1e-12));
      CHECK(u.deriv == doctest::Approx(std::sinh(x) * std::tanh(b) - std::cosh(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: u_zero_b boundary values") {
  Gen g(5);
  for (int i = 0; i < 100; ++i) {
    const FluctuationKit k = build_kit(g.params());
    const double b = g.uniform(0.05, 4.0);
    CHECK(std::abs(u_zero_b(k, b, b).value) < 1e-12);
    CHECK(u_zero_b(k, 0.0, b).deriv == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(u_zero_b(k, 0.5 * b, b).value > 0.0);
  }
  const FluctuationKit k(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(u_zero_b(k, 2.0, 1.0), Error);
  CHECK_THROWS_AS(u_zero_b(k, 0.0, 0.0), Error);
}

TEST_CASE("shifted_kit examples") {
  const ModelParams p = params(1.0, std::sqrt(2.0), 1.0, 2.0);
  const FluctuationKit base = build_kit(p), zero = shifted_kit(p, 0.0);
  CHECK(zero.alpha1() == base.alpha1());
  CHECK(zero.alpha2() == base.alpha2());
  CHECK(zero.delta() == base.delta());
  const FluctuationKit one = shifted_kit(p, 1.0);
  CHECK(one.delta() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(one.alpha1() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(one.alpha2() == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(shifted_kit(p, -0.5), Error);
}

TEST_CASE("property: shifted alpha1 increases with the rate") {
  Gen g(6);
  for (int i = 0; i < 30; ++i) {
    const ModelParams p = g.params();
    double prev = shifted_kit(p, 0.0).alpha1();
    for (int j = 1; j <= 40; ++j) {
      const double a = shifted_kit(p, 0.1 * j).alpha1();
      CHECK(a > prev);
      prev = a;
    }
  }
}
