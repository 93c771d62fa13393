#include "biortho/replica.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "biortho/errors.hpp"
#include "biortho/specfun.hpp"

namespace biortho::replica {

using specfun::q_function;
using specfun::q_inverse;
using specfun::r_func;

namespace {

constexpr double kArgFloor = 1e-12;           // Q^{-1} domain protection
constexpr double kArgCeil = 0.5 - 1e-12;
constexpr double kChiFloor = 1e-12;

struct Equations {
  double mu;

  double rho1(double rho) const { return 2.0 * mu * rho / (1.0 + mu); }
  double rho2(double rho) const { return 2.0 * rho / (1.0 + mu); }

  // (i)  chi_hat_1 = [Q^{-1}(1/4 - rho1 (1/2 - Q(1/sqrt(chi_hat_1))))]^{-2}
  double q_inverse_arg(double chi_hat_1, double rho) const {
    return 0.25 - rho1(rho) * (0.5 - q_function(1.0 / std::sqrt(chi_hat_1)));
  }
  double rhs_chi_hat_1(double chi_hat_1, double rho, bool* clamped) const {
    double arg = q_inverse_arg(chi_hat_1, rho);
    const double clamped_arg = std::clamp(arg, kArgFloor, kArgCeil);
    if (clamped && clamped_arg != arg) *clamped = true;
    const double q = q_inverse(clamped_arg);
    return 1.0 / (q * q);
  }

  // (ii)  eta = 2 rho1 [1 + chi_hat_1 + 2 r(chi_hat_1)] - 4 r(chi_hat_1) - chi_hat_1
  double rhs_eta(double chi_hat_1, double rho) const {
    const double r1 = r_func(chi_hat_1);
    return 2.0 * rho1(rho) * (1.0 + chi_hat_1 + 2.0 * r1) - 4.0 * r1 - chi_hat_1;
  }

  // (iii)  chi_hat_2 = 2 rho2 [1 + chi_hat_2 + 2 r(chi_hat_2)] - 4 r(chi_hat_2) + eta
  double rhs_chi_hat_2(double chi_hat_2, double eta, double rho) const {
    const double r2 = r_func(chi_hat_2);
    return 2.0 * rho2(rho) * (1.0 + chi_hat_2 + 2.0 * r2) - 4.0 * r2 + eta;
  }

  // (iv)  rho = (1+mu) [1/2 - 2 Q(1/sqrt(chi_hat_2))] / [2 - 4 Q(1/sqrt(chi_hat_2))]
  double rhs_rho(double chi_hat_2) const {
    const double q2 = q_function(1.0 / std::sqrt(chi_hat_2));
    return (1.0 + mu) * (0.5 - 2.0 * q2) / (2.0 - 4.0 * q2);
  }
};

}  // namespace

std::pair<double, double> block_densities(double mu, double rho) {
  if (!(mu >= 0.0 && mu <= 1.0))
    throw std::domain_error("block_densities: mu must lie in [0,1]");
  if (!(rho > 0.0 && rho <= 0.5))
    throw std::domain_error("block_densities: rho must lie in (0, 1/2]");
  return {2.0 * mu * rho / (1.0 + mu), 2.0 * rho / (1.0 + mu)};
}

SparsityProfile SparsityProfile::make(double mu, double rho) {
  auto [rho1, rho2] = block_densities(mu, rho);
  return {mu, rho, rho1, rho2};
}

double equation_defect(double mu, double chi_hat_1, double eta,
                       double chi_hat_2, double rho) {
  if (!(chi_hat_1 > 0.0) || !(chi_hat_2 > 0.0) || !(rho > 0.0) || rho >= 0.5)
    return std::numeric_limits<double>::infinity();
  const Equations eq{mu};
  const double arg = eq.q_inverse_arg(chi_hat_1, rho);
  if (!(arg > 0.0 && arg < 0.5))
    return std::numeric_limits<double>::infinity();
  const double q = q_inverse(arg);
  const double d1 = std::abs(1.0 / (q * q) - chi_hat_1);
  const double d2 = std::abs(eq.rhs_eta(chi_hat_1, rho) - eta);
  const double d3 = std::abs(eq.rhs_chi_hat_2(chi_hat_2, eta, rho) - chi_hat_2);
  const double d4 = std::abs(eq.rhs_rho(chi_hat_2) - rho);
  return std::max(std::max(d1, d2), std::max(d3, d4));
}

ReplicaSolution solve_bi_orthogonal_threshold(double mu,
                                              const SolverConfig& cfg) {
  if (!(mu >= 0.0 && mu <= 1.0))
    throw std::domain_error("solve_bi_orthogonal_threshold: mu must lie in [0,1]");
  if (!(cfg.tolerance > 0.0) || !(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::domain_error("solve_bi_orthogonal_threshold: bad solver config");

  const Equations eq{mu};
  const double d = cfg.damping;
  double chi1 = cfg.initial_chi_hat, eta = 0.0, chi2 = cfg.initial_chi_hat;
  double rho = cfg.initial_rho;

  // once inside the tolerance, keep sweeping while the defect still
  // improves; the iteration is linearly convergent, so this reaches the
  // arithmetic floor at negligible cost
  bool hit_tolerance = false;
  int stagnant = 0;
  ReplicaSolution best;
  best.residual = std::numeric_limits<double>::infinity();

  double defect = std::numeric_limits<double>::infinity();
  for (long it = 0; it < cfg.max_iterations; ++it) {
    bool clamped = false;
    // successive substitution in equation order, each step on fresh values
    chi1 = std::max((1.0 - d) * chi1 + d * eq.rhs_chi_hat_1(chi1, rho, &clamped),
                    kChiFloor);
    eta = (1.0 - d) * eta + d * eq.rhs_eta(chi1, rho);
    chi2 = std::max((1.0 - d) * chi2 + d * eq.rhs_chi_hat_2(chi2, eta, rho),
                    kChiFloor);
    rho = std::clamp((1.0 - d) * rho + d * eq.rhs_rho(chi2), 1e-6, 0.5 - 1e-6);

    defect = equation_defect(mu, chi1, eta, chi2, rho);
    if (defect <= cfg.tolerance && !clamped) hit_tolerance = true;
    if (hit_tolerance) {
      if (defect < best.residual) {
        best = {SparsityProfile::make(mu, rho), chi1, chi2, eta, rho, it + 1,
                defect};
        stagnant = 0;
      } else if (++stagnant >= 30) {  // the decay can oscillate
        return best;
      }
    }
  }
  if (hit_tolerance) return best;
  throw ConvergenceError(
      "solve_bi_orthogonal_threshold: no fixed point within " +
          std::to_string(cfg.max_iterations) + " iterations (mu=" +
          std::to_string(mu) + ")",
      defect);
}

ReplicaSolution solve_rot_invariant_threshold(const SolverConfig& cfg) {
  if (!(cfg.tolerance > 0.0) || !(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::domain_error("solve_rot_invariant_threshold: bad solver config");

  const double d = cfg.damping;
  double chi = cfg.initial_chi_hat, rho = cfg.initial_rho;
  bool hit_tolerance = false;
  int stagnant = 0;
  ReplicaSolution best;
  best.residual = std::numeric_limits<double>::infinity();
  double defect = std::numeric_limits<double>::infinity();
  for (long it = 0; it < cfg.max_iterations; ++it) {
    const double r = r_func(chi);
    chi = std::max(
        (1.0 - d) * chi + d * (2.0 * rho * (1.0 + chi + 2.0 * r) - 4.0 * r),
        kChiFloor);
    const double q2 = q_function(1.0 / std::sqrt(chi));
    rho = std::clamp((1.0 - d) * rho + d * (0.5 - 2.0 * q2) / (1.0 - 2.0 * q2),
                     1e-6, 0.5 - 1e-6);

    const double rr = r_func(chi);
    const double q = q_function(1.0 / std::sqrt(chi));
    defect = std::max(
        std::abs(2.0 * rho * (1.0 + chi + 2.0 * rr) - 4.0 * rr - chi),
        std::abs((0.5 - 2.0 * q) / (1.0 - 2.0 * q) - rho));
    if (defect <= cfg.tolerance) hit_tolerance = true;
    if (hit_tolerance) {
      if (defect < best.residual) {
        best = {SparsityProfile::make(1.0, rho), chi, chi, 0.0, rho, it + 1,
                defect};
        stagnant = 0;
      } else if (++stagnant >= 30) {
        return best;
      }
    }
  }
  if (hit_tolerance) return best;
  throw ConvergenceError("solve_rot_invariant_threshold: no fixed point", defect);
}

namespace {

// root of (i) in chi_hat_1 for fixed rho; the right side is bounded, so the
// bracket [tiny, huge] always straddles
double bisect_chi_hat_1(const Equations& eq, double rho) {
  auto g = [&](double c) {
    bool clamped = false;
    return c - eq.rhs_chi_hat_1(c, rho, &clamped);
  };
  double lo = 1e-9, hi = 500.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// signed defect of (iv) at the lower branch of (iii); +1 / -1 sentinels when
// the branch does not exist on the respective side of the transition
double outer_defect(const Equations& eq, double rho) {
  const double chi1 = bisect_chi_hat_1(eq, rho);
  const double eta = eq.rhs_eta(chi1, rho);
  auto g3 = [&](double c) { return c - eq.rhs_chi_hat_2(c, eta, rho); };

  const double eps = 1e-10;
  if (g3(eps) > 0.0) return 1.0;  // lower root exited through zero: rho below critical

  // g3 rises to a single hump and falls; locate the maximum
  double lo = eps, hi = 10.0;
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (g3(m1) < g3(m2))
      lo = m1;
    else
      hi = m2;
  }
  const double c_peak = 0.5 * (lo + hi);
  if (g3(c_peak) < 0.0) return -1.0;  // no solution of (iii): rho above critical

  lo = eps;
  hi = c_peak;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g3(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double chi2 = 0.5 * (lo + hi);
  return eq.rhs_rho(chi2) - rho;
}

}  // namespace

ReplicaSolution solve_threshold_by_bisection(double mu, double tol) {
  if (!(mu >= 0.0 && mu <= 1.0))
    throw std::domain_error("solve_threshold_by_bisection: mu must lie in [0,1]");
  const Equations eq{mu};
  double lo = 0.15, hi = 0.40;
  long iters = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (outer_defect(eq, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    ++iters;
  }
  const double rho = 0.5 * (lo + hi);
  const double chi1 = bisect_chi_hat_1(eq, rho);
  const double eta = eq.rhs_eta(chi1, rho);
  // at the transition the two branches of (iii) merge; report the hump top
  auto g3 = [&](double c) { return c - eq.rhs_chi_hat_2(c, eta, rho); };
  double a = 1e-10, b = 10.0;
  for (int it = 0; it < 300; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (g3(m1) < g3(m2))
      a = m1;
    else
      b = m2;
  }
  const double chi2 = 0.5 * (a + b);
  return {SparsityProfile::make(mu, rho), chi1, chi2, eta, rho, iters,
          equation_defect(mu, chi1, eta, chi2, rho)};
}

double evaluate_T(const ThetaBlock& t, double rho_i) {
  if (!(t.chi > 0.0) || !(t.q_hat > 0.0))
    throw std::domain_error("evaluate_T: chi and Q_hat must be positive");
  if (t.chi_hat < 0.0)
    throw std::domain_error("evaluate_T: chi_hat must be >= 0");
  const double bilinear = (rho_i - 2.0 * t.m + t.q) / (4.0 * t.chi) -
                          0.5 * t.q * t.q_hat + 0.5 * t.chi * t.chi_hat +
                          t.m * t.m_hat;
  return bilinear + ((1.0 - rho_i) * r_func(t.chi_hat) +
                     rho_i * r_func(t.m_hat * t.m_hat + t.chi_hat)) /
                        t.q_hat;
}

double evaluate_T_by_quadrature(const ThetaBlock& t, double rho_i) {
  if (!(t.chi > 0.0) || !(t.q_hat > 0.0))
    throw std::domain_error("evaluate_T_by_quadrature: chi and Q_hat must be positive");
  if (t.chi_hat < 0.0)
    throw std::domain_error("evaluate_T_by_quadrature: chi_hat must be >= 0");
  const double bilinear = (rho_i - 2.0 * t.m + t.q) / (4.0 * t.chi) -
                          0.5 * t.q * t.q_hat + 0.5 * t.chi * t.chi_hat +
                          t.m * t.m_hat;
  const double s_zero = std::sqrt(t.chi_hat);
  const double s_signal = std::sqrt(t.m_hat * t.m_hat + t.chi_hat);
  const double integral = specfun::integrate_gaussian_adaptive(
      [&](double z) {
        return (1.0 - rho_i) * specfun::phi(z * s_zero, t.q_hat).value +
               rho_i * specfun::phi(z * s_signal, t.q_hat).value;
      },
      1e-12);
  return bilinear + integral;
}

std::vector<ReplicaSolution> sweep_mu(const std::vector<double>& grid,
                                      const SolverConfig& cfg) {
  std::vector<ReplicaSolution> out;
  out.reserve(grid.size());
  for (double mu : grid) {
    try {
      out.push_back(solve_bi_orthogonal_threshold(mu, cfg));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(
          "sweep_mu: failed at mu=" + std::to_string(mu) + ": " + e.what(),
          e.residual());
    }
  }
  return out;
}

}  // namespace biortho::replica
