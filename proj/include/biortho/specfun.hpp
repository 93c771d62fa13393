#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace biortho::specfun {

/// Nodes and weights for integration against the standard Gaussian
/// measure Dz = (2*pi)^{-1/2} exp(-z^2/2) dz.  Weights are positive and
/// sum to 1; the rule is exact for polynomials of degree < 2*size().
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// Gauss-Hermite rule for Dz via Golub-Welsch on the probabilists'
  /// Hermite recurrence.
  static QuadratureRule gauss_hermite(int n = 96);
};

/// Upper Gaussian tail Q(x) = integral_x^inf Dz.
double q_function(double x);

/// Functional inverse of q_function on (0,1).  Throws std::domain_error
/// outside the open interval.
double q_inverse(double p);

/// r(h) = sqrt(h/(2*pi)) exp(-1/(2h)) - (1+h) Q(1/sqrt(h)) for h >= 0,
/// with r(0) = 0 taken as the limit value.  Throws for h < 0.
double r_func(double h);

struct PhiResult {
  double value;      // <= 0
  double minimizer;  // soft-threshold point
};

/// Scalar minimization phi(h; q_hat) = min_x { q_hat x^2/2 - h x + |x| }.
/// Requires q_hat > 0.
PhiResult phi(double h, double q_hat);

/// Fixed-rule expectation sum_i w_i f(z_i).  Throws on an empty rule.
double integrate_gaussian(const std::function<double(double)>& f,
                          const QuadratureRule& rule);

/// Adaptive Gauss-Kronrod expectation over Dz, for integrands with kinks
/// that a fixed Hermite rule cannot resolve (the free-energy terms built
/// from phi).  Integrates f(z) * gaussian_pdf(z) over |z| <= z_max.
double integrate_gaussian_adaptive(const std::function<double(double)>& f,
                                   double abs_tol = 1e-12,
                                   double z_max = 40.0);

/// Adaptive Gauss-Kronrod integral of f over [a, b].  Throws
/// QuadratureError when the requested tolerance cannot be reached.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-12,
                          double rel_tol = 1e-12);

}  // namespace biortho::specfun
