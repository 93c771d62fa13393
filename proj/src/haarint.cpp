#include "biortho/haarint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "biortho/specfun.hpp"

namespace biortho::haarint {

namespace {

// closed form, total on c^2 r1 r2 >= 0
double f_closed(double c2r1r2) {
  const double s = std::sqrt(1.0 + 4.0 * c2r1r2);
  return 0.5 * s - 0.5 * std::log(0.5 * (1.0 + s)) - 0.5;
}

}  // namespace

double f_haar(double r1, double r2, double c) {
  if (!(r1 > 0.0) || !(r2 > 0.0))
    throw std::domain_error("f_haar: radii must be positive");
  return f_closed(c * c * r1 * r2);
}

double f_haar_asymptotic(double r1, double r2, double c) {
  const double a = c * c * r1 * r2;
  if (!(a > 0.0))
    throw std::domain_error("f_haar_asymptotic: c^2 r1 r2 must be positive");
  return std::sqrt(a) - 0.25 * std::log(a);
}

double i_m_quadrature(int m, double r1, double r2, double c) {
  if (m < 3) throw std::domain_error("i_m_quadrature: need M >= 3");
  if (!(r1 > 0.0) || !(r2 > 0.0))
    throw std::domain_error("i_m_quadrature: radii must be positive");
  if (c == 0.0) return 0.0;

  const double scale = c * m * std::sqrt(r1 * r2);
  const double nu = 0.5 * (m - 3);

  // log of the (unnormalized) cosine density tilted by exp(scale * t)
  auto log_integrand = [&](double t) {
    return scale * t + nu * std::log1p(-t * t);
  };

  // interior maximum of scale*t + nu*log(1-t^2):
  // scale (1 - t^2) = 2 nu t  =>  scale t^2 + 2 nu t - scale = 0
  double t_star;
  if (nu > 0.0) {
    t_star = (std::sqrt(nu * nu + scale * scale) - nu) / scale;
  } else {
    t_star = scale > 0.0 ? 1.0 : -1.0;  // M == 3: integrand monotone
  }
  t_star = std::clamp(t_star, -1.0, 1.0);
  const double log_peak = (std::abs(t_star) < 1.0) ? log_integrand(t_star)
                                                   : scale * t_star;

  auto shifted = [&](double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(log_integrand(t) - log_peak);
  };
  auto density = [&](double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(nu * std::log1p(-t * t));
  };

  const double tol = 1e-13;
  double numer = specfun::integrate_adaptive(shifted, -1.0, t_star, tol, 1e-12) +
                 specfun::integrate_adaptive(shifted, t_star, 1.0, tol, 1e-12);
  double denom = 2.0 * specfun::integrate_adaptive(density, 0.0, 1.0, tol, 1e-12);
  return (log_peak + std::log(numer) - std::log(denom)) / m;
}

double lemma2_value(const OverlapPair& block1, const OverlapPair& block2,
                    double c, int u) {
  if (u < 1) throw std::domain_error("lemma2_value: need u >= 1");
  for (const OverlapPair* b : {&block1, &block2}) {
    if (!(b->s11 >= b->s12) || !(b->s12 >= 0.0) ||
        !(b->s11 - b->s12 + u * b->s12 >= 0.0))
      throw std::domain_error("lemma2_value: overlaps outside the RS-admissible region");
  }
  const double mixed1 = block1.s11 - block1.s12 + u * block1.s12;
  const double mixed2 = block2.s11 - block2.s12 + u * block2.s12;
  const double diag1 = block1.s11 - block1.s12;
  const double diag2 = block2.s11 - block2.s12;
  return f_closed(c * c * mixed1 * mixed2) +
         (u - 1) * f_closed(c * c * diag1 * diag2);
}

}  // namespace biortho::haarint
