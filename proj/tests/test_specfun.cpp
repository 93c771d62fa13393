#include "biortho/specfun.hpp"

#include <cmath>
#include <doctest.h>
#include <stdexcept>

#include "biortho/errors.hpp"
#include "biortho/rng.hpp"

using namespace biortho;
using namespace biortho::specfun;

namespace {

// independent oracle: derivative-free minimization of the convex scalar
// objective q_hat x^2/2 - h x + |x| (coarse scan, then ternary refinement)
double oracle_phi_min(double h, double q_hat, double lo = -10.0,
                      double hi = 10.0) {
  auto objective = [&](double x) {
    return 0.5 * q_hat * x * x - h * x + std::abs(x);
  };
  double best_x = lo;
  double best = objective(lo);
  for (int i = 1; i <= 4000; ++i) {
    const double x = lo + (hi - lo) * i / 4000.0;
    const double v = objective(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  double a = best_x - (hi - lo) / 4000.0;
  double b = best_x + (hi - lo) / 4000.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (objective(m1) < objective(m2))
      b = m2;
    else
      a = m1;
  }
  return objective(0.5 * (a + b));
}

// independent oracle: bisection of q_function itself
double oracle_q_inverse(double p) {
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (q_function(mid) > p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("gauss-hermite rule matches the Gaussian measure") {
  const auto rule = QuadratureRule::gauss_hermite(96);
  REQUIRE(rule.size() == 96);
  double w_sum = 0.0, second = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    CHECK(rule.weights[i] > 0.0);
    w_sum += rule.weights[i];
    second += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
  }
  CHECK(std::abs(w_sum - 1.0) <= 1e-12);
  CHECK(std::abs(second - 1.0) <= 1e-10);
}

TEST_CASE("q_function basics") {
  CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(q_function(1.6448536269514722) - 0.05) <= 1e-10);
  for (double x : {-7.5, -3.0, -0.7, 0.0, 0.3, 1.0, 2.5, 6.0, 8.0}) {
    CHECK(std::abs(q_function(x) + q_function(-x) - 1.0) <= 1e-14);
  }
  // strictly decreasing
  CHECK(q_function(1.0) > q_function(1.0 + 1e-9));
}

TEST_CASE("q_inverse round trips and matches the bisection oracle") {
  CHECK(q_inverse(0.5) == 0.0);
  CHECK(std::abs(q_inverse(q_function(1.0)) - 1.0) <= 1e-12);
  CHECK(std::abs(q_inverse(0.25) - 0.6744897501960817) <= 1e-9);
  CHECK(std::abs(q_inverse(0.25) - oracle_q_inverse(0.25)) <= 1e-12);

  RandomStream rng(42);
  for (int i = 0; i < 200; ++i) {
    const double p = 0.001 + 0.998 * rng.uniform();
    CHECK(std::abs(q_function(q_inverse(p)) - p) <= 1e-12);
  }
  // monotone decreasing in p
  CHECK(q_inverse(0.2) > q_inverse(0.2 + 1e-6));

  CHECK_THROWS_AS(q_inverse(0.0), std::domain_error);
  CHECK_THROWS_AS(q_inverse(1.0), std::domain_error);
  CHECK_THROWS_AS(q_inverse(-0.3), std::domain_error);
  CHECK_THROWS_AS(q_inverse(1.7), std::domain_error);
}

TEST_CASE("r_func limits and sign") {
  CHECK(r_func(0.0) == 0.0);
  CHECK(r_func(1e-10) == 0.0);
  CHECK_THROWS_AS(r_func(-1e-12), std::domain_error);
  RandomStream rng(7);
  for (int i = 0; i < 100; ++i) {
    const double h = 100.0 * rng.uniform();
    CHECK(r_func(h) <= 0.0);
  }
}

TEST_CASE("phi closed form against the scan oracle") {
  const auto at_zero = phi(0.0, 1.0);
  CHECK(at_zero.value == 0.0);
  CHECK(at_zero.minimizer == 0.0);

  const auto below = phi(0.5, 1.0);
  CHECK(below.value == 0.0);
  CHECK(below.minimizer == 0.0);
  CHECK(std::abs(below.value - oracle_phi_min(0.5, 1.0)) <= 1e-9);

  const auto above = phi(2.0, 1.0);
  CHECK(above.value == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(above.minimizer == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(above.value - oracle_phi_min(2.0, 1.0)) <= 1e-9);

  CHECK_THROWS_AS(phi(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(phi(1.0, -2.0), std::domain_error);

  RandomStream rng(11);
  for (int i = 0; i < 50; ++i) {
    const double h = 100.0 * rng.uniform();
    const double q_hat = 1e-2 + 100.0 * rng.uniform();
    const auto got = phi(h, q_hat);
    CHECK(got.value <= 0.0);
    const double span = (h + 1.0) / q_hat + 1.0;
    CHECK(std::abs(got.value - oracle_phi_min(h, q_hat, -span, span)) <= 1e-9);
  }
}

TEST_CASE("integrate_gaussian moments") {
  const auto rule = QuadratureRule::gauss_hermite(96);
  CHECK(std::abs(integrate_gaussian([](double) { return 1.0; }, rule) - 1.0) <=
        1e-12);
  CHECK(std::abs(integrate_gaussian([](double z) { return z * z; }, rule) -
                 1.0) <= 1e-10);
  CHECK(std::abs(integrate_gaussian([](double z) { return z * z * z * z; },
                                    rule) -
                 3.0) <= 1e-8);
  CHECK_THROWS_AS(integrate_gaussian([](double) { return 1.0; },
                                     QuadratureRule{}),
                  std::domain_error);
}

TEST_CASE("integral identity: quadrature of phi vs r_func") {
  // r(h)/q_hat equals the Gaussian expectation of phi(z sqrt(h); q_hat)
  for (double h : {1.0, 4.0}) {
    const double by_quadrature = integrate_gaussian_adaptive(
        [&](double z) { return phi(z * std::sqrt(h), 1.0).value; });
    CHECK(std::abs(by_quadrature - r_func(h)) <= 1e-8);
  }

  RandomStream rng(123);
  for (int i = 0; i < 60; ++i) {
    const double chi_hat = 1e-3 + 50.0 * rng.uniform();
    const double q_hat = 0.01 + 49.99 * rng.uniform();
    const double got = integrate_gaussian_adaptive(
        [&](double z) { return phi(z * std::sqrt(chi_hat), q_hat).value; });
    CHECK(std::abs(got - r_func(chi_hat) / q_hat) <= 1e-8);
  }

  // extended identity with the signal term
  RandomStream rng2(321);
  for (int i = 0; i < 40; ++i) {
    const double chi_hat = 1e-3 + 30.0 * rng2.uniform();
    const double m_hat = 8.0 * rng2.uniform();
    const double q_hat = 0.05 + 20.0 * rng2.uniform();
    const double h = m_hat * m_hat + chi_hat;
    const double got = integrate_gaussian_adaptive(
        [&](double z) { return phi(z * std::sqrt(h), q_hat).value; });
    CHECK(std::abs(got - r_func(h) / q_hat) <= 1e-8);
  }

  // the fixed 96-node Hermite rule resolves the same integrand only to the
  // kink-limited level; it is kept for smooth integrands
  const auto rule = QuadratureRule::gauss_hermite(96);
  const double gh = integrate_gaussian(
      [](double z) { return phi(z * std::sqrt(2.0), 1.0).value; }, rule);
  CHECK(std::abs(gh - r_func(2.0)) <= 1e-3);
}
