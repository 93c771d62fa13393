#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace biortho::replica {

/// Block imbalance mu in [0,1] plus overall density rho, with the derived
/// per-block densities rho1 = 2*mu*rho/(1+mu) and rho2 = 2*rho/(1+mu).
struct SparsityProfile {
  double mu;
  double rho;
  double rho1;
  double rho2;

  static SparsityProfile make(double mu, double rho);
};

/// (rho1, rho2) for given imbalance and overall density.
std::pair<double, double> block_densities(double mu, double rho);

struct SolverConfig {
  double tolerance = 1e-12;
  long max_iterations = 100000;
  double damping = 0.5;          // in (0,1]
  double initial_chi_hat = 1.0;  // starting value for both chi_hat blocks
  double initial_rho = 0.2;      // bracketed by the two endpoint values
};

struct ReplicaSolution {
  SparsityProfile profile;
  double chi_hat_1 = 0.0;
  double chi_hat_2 = 0.0;
  double eta = 0.0;
  double rho_critical = 0.0;
  long iterations = 0;
  double residual = 0.0;  // max absolute defect over the four equations
};

/// Critical density for the bi-orthogonal dictionary at imbalance mu:
/// damped successive substitution on the four coupled equations for
/// (chi_hat_1, eta, chi_hat_2, rho).  Throws ConvergenceError when the
/// iteration budget runs out.
ReplicaSolution solve_bi_orthogonal_threshold(double mu,
                                              const SolverConfig& cfg = {});

/// Reduced two-equation system with eta pinned to 0 and a single chi_hat;
/// the threshold for dictionaries from the rotationally invariant
/// ensembles, equal to the mu = 1 bi-orthogonal value.
ReplicaSolution solve_rot_invariant_threshold(const SolverConfig& cfg = {});

/// Independent oracle for the same threshold: nested scalar bisection
/// (chi_hat_1 from equation (i), eta from (ii), chi_hat_2 from (iii),
/// outer bisection of rho on the defect of (iv)).  Shares no iteration
/// machinery with the damped solver.
ReplicaSolution solve_threshold_by_bisection(double mu, double tol = 1e-13);

/// Maximum absolute defect of the four fixed-point equations at the given
/// point; the solver drives this below cfg.tolerance.
double equation_defect(double mu, double chi_hat_1, double eta,
                       double chi_hat_2, double rho);

/// One block's order parameters (direct and conjugate).
struct ThetaBlock {
  double q = 0.0;      // Q_i
  double chi = 0.0;    // chi_i > 0
  double m = 0.0;      // m_i
  double q_hat = 0.0;  // Q_hat_i > 0
  double chi_hat = 0.0;
  double m_hat = 0.0;
};

/// Closed form of the per-block free-energy term T(Theta_i):
///   (rho_i - 2 m_i + Q_i)/(4 chi_i) - Q_i Q_hat_i / 2 + chi_i chi_hat_i / 2
///   + m_i m_hat_i + [(1-rho_i) r(chi_hat_i) + rho_i r(m_hat_i^2+chi_hat_i)] / Q_hat_i.
double evaluate_T(const ThetaBlock& theta, double rho_i);

/// Same term with the r-contributions replaced by the adaptive-quadrature
/// evaluation of the underlying Gaussian integral of phi; used as the
/// independent cross-check of evaluate_T.
double evaluate_T_by_quadrature(const ThetaBlock& theta, double rho_i);

/// One converged solution per grid value; throws on the first failure with
/// the offending mu in the message.
std::vector<ReplicaSolution> sweep_mu(const std::vector<double>& grid,
                                      const SolverConfig& cfg = {});

}  // namespace biortho::replica
