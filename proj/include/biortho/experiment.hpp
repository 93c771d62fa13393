#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "biortho/randmat.hpp"

namespace biortho::experiment {

struct ExperimentConfig {
  randmat::DictionaryKind kind = randmat::DictionaryKind::bi_orthogonal;
  double mu = 0.0;
  std::vector<int> sizes;    // N = 2M, even, >= 4
  std::vector<double> rhos;  // in (0, 1/2)
  long trials = 1000;
  std::uint64_t master_seed = 1;
  double recovery_tol = 1e-8;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;  // throws std::domain_error on bad fields
};

struct CurvePoint {
  double rho = 0.0;
  long successes = 0;
  long trials = 0;
  long lp_failures = 0;
  double success_rate = 0.0;  // successes / trials, exactly
  bool flagged = false;       // > 0.1% LP failures
};

struct SuccessCurve {
  int n = 0;  // system size N
  std::vector<CurvePoint> points;
};

struct CriticalEstimate {
  double rho_c = 0.0;
  double std_error = 0.0;
  double width = 0.0;  // fitted logistic width (transition sharpness)
};

struct ExtrapolationFit {
  std::vector<double> abscissas;   // x = 1/N
  std::vector<double> rho_c;       // per-N estimates
  std::vector<double> std_errors;  // their standard errors
  std::array<double, 4> coeffs{};  // a0..a3 of the cubic in x
  double intercept = 0.0;          // = coeffs[0], the x -> 0 limit
  double intercept_std_error = 0.0;
  double residual_norm = 0.0;      // weighted residual 2-norm
};

/// Instance seed of one trial, derived from (master_seed, N, rho_index,
/// trial); exposed so a flagged trial can be reproduced in isolation.
std::uint64_t trial_seed(std::uint64_t master, int n, int rho_index,
                         long trial);

/// Run all trials of one (N, rho-index) point.  Each trial derives its
/// stream from (master_seed, N, rho_index, trial), so counts do not depend
/// on execution order or thread count.
CurvePoint run_trials(const ExperimentConfig& config, int n, int rho_index);

/// All configured rho points at one size.
SuccessCurve success_curve(const ExperimentConfig& config, int n);

/// 50% crossing of a logistic fit 1/(1+exp((rho-c)/w)) to the curve;
/// standard error from the fit covariance.  Requires rates on both sides
/// of 1/2 (throws EstimationError otherwise, with advice to widen the
/// grid).
CriticalEstimate critical_density_estimate(const SuccessCurve& curve);

/// Weighted least-squares cubic in x = 1/N through (rho_c, std_error)
/// points; the intercept at x = 0 is the thermodynamic-limit estimate.
/// Requires at least 5 distinct sizes.
ExtrapolationFit finite_size_extrapolate(
    const std::vector<int>& sizes, const std::vector<CriticalEstimate>& points);

/// Raw curves for every configured size, in order.
std::vector<SuccessCurve> run_experiment(const ExperimentConfig& config);

// --- persistence ----------------------------------------------------------

std::string kind_label(randmat::DictionaryKind kind);
randmat::DictionaryKind kind_from_label(const std::string& label);

/// Success-curve CSV: header kind,mu,N,rho,trials,successes,success_rate
/// with rates at 17 significant digits.
void write_curves_csv(const std::string& path, const ExperimentConfig& config,
                      const std::vector<SuccessCurve>& curves);

/// Fit CSV: header kind,mu,abscissa,rho_c,stderr plus a trailing comment
/// line "# intercept=<value> coeffs=<a0,a1,a2,a3>".
void write_fit_csv(const std::string& path, const ExperimentConfig& config,
                   const ExtrapolationFit& fit);

/// JSON manifest: config echo, master seed, per-point flagged-failure
/// counts.
void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::vector<SuccessCurve>& curves);

struct LoadedCurves {
  std::string kind;
  double mu = 0.0;
  std::vector<SuccessCurve> curves;
};

LoadedCurves load_curves_csv(const std::string& path);

struct LoadedFit {
  std::string kind;
  double mu = 0.0;
  ExtrapolationFit fit;
};

LoadedFit load_fit_csv(const std::string& path);

}  // namespace biortho::experiment
