#include "biortho/experiment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "biortho/errors.hpp"
#include "biortho/lp.hpp"
#include "biortho/replica.hpp"

namespace biortho::experiment {

namespace {

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, int n, int rho_index,
                         long trial) {
  return RandomStream::derive(master,
                              {static_cast<std::uint64_t>(n),
                               static_cast<std::uint64_t>(rho_index),
                               static_cast<std::uint64_t>(trial)})
      .next_u64();
}

void ExperimentConfig::validate() const {
  if (sizes.empty() || rhos.empty())
    throw std::domain_error("ExperimentConfig: need at least one size and one rho");
  for (int n : sizes)
    if (n < 4 || n % 2 != 0)
      throw std::domain_error("ExperimentConfig: sizes must be even and >= 4");
  for (double rho : rhos)
    if (!(rho > 0.0 && rho < 0.5))
      throw std::domain_error("ExperimentConfig: rho values must lie in (0, 1/2)");
  if (trials < 1) throw std::domain_error("ExperimentConfig: trials must be >= 1");
  if (!(recovery_tol > 0.0))
    throw std::domain_error("ExperimentConfig: recovery tolerance must be positive");
}

CurvePoint run_trials(const ExperimentConfig& config, int n, int rho_index) {
  config.validate();
  if (rho_index < 0 || rho_index >= static_cast<int>(config.rhos.size()))
    throw std::domain_error("run_trials: rho index out of range");
  const double rho = config.rhos[rho_index];
  const int m = n / 2;
  const auto profile = replica::SparsityProfile::make(config.mu, rho);

  int n_threads = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(
      std::min<long>(n_threads, config.trials));

  std::atomic<long> next{0};
  std::vector<long> successes(n_threads, 0), failures(n_threads, 0);

  auto worker = [&](int tid) {
    long trial;
    while ((trial = next.fetch_add(1)) < config.trials) {
      const std::uint64_t seed = trial_seed(config.master_seed, n, rho_index, trial);
      const auto instance = randmat::build_instance(m, profile, config.kind, seed);
      try {
        const auto [x_hat, objective] = lp::l1_reconstruct(instance);
        (void)objective;
        if (lp::check_recovery(x_hat, instance.signal.concatenated(),
                               config.recovery_tol))
          ++successes[tid];
      } catch (const lp::LpFailure&) {
        ++failures[tid];
      }
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }

  CurvePoint point;
  point.rho = rho;
  point.trials = config.trials;
  for (int t = 0; t < n_threads; ++t) {
    point.successes += successes[t];
    point.lp_failures += failures[t];
  }
  point.success_rate =
      static_cast<double>(point.successes) / static_cast<double>(point.trials);
  point.flagged = point.lp_failures * 1000 > point.trials;  // > 0.1%
  return point;
}

SuccessCurve success_curve(const ExperimentConfig& config, int n) {
  SuccessCurve curve;
  curve.n = n;
  curve.points.reserve(config.rhos.size());
  for (int i = 0; i < static_cast<int>(config.rhos.size()); ++i)
    curve.points.push_back(run_trials(config, n, i));
  return curve;
}

std::vector<SuccessCurve> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<SuccessCurve> curves;
  curves.reserve(config.sizes.size());
  for (int n : config.sizes) curves.push_back(success_curve(config, n));
  return curves;
}

namespace {

double logistic(double rho, double center, double width) {
  return 1.0 / (1.0 + std::exp((rho - center) / width));
}

}  // namespace

CriticalEstimate critical_density_estimate(const SuccessCurve& curve) {
  std::vector<double> rho, rate, weight;
  for (const CurvePoint& p : curve.points) {
    if (p.flagged) continue;
    rho.push_back(p.rho);
    rate.push_back(p.success_rate);
    weight.push_back(static_cast<double>(p.trials));
  }
  const int npts = static_cast<int>(rho.size());
  if (npts < 2)
    throw EstimationError("critical_density_estimate: not enough valid points");

  // locate the high->low crossing of 1/2 along increasing rho
  int cross = -1;
  for (int i = 0; i + 1 < npts; ++i) {
    if (rate[i] >= 0.5 && rate[i + 1] < 0.5) {
      cross = i;
      break;
    }
  }
  double lo = rate[0], hi = rate[0];
  for (double p : rate) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (cross < 0 || hi <= 0.5 || lo >= 0.5)
    throw EstimationError(
        "critical_density_estimate: success rates do not bracket 1/2 with a "
        "decreasing crossing; widen the rho grid");

  const double span = rho.back() - rho.front();
  double center =
      rho[cross] + (rate[cross] - 0.5) / (rate[cross] - rate[cross + 1]) *
                       (rho[cross + 1] - rho[cross]);
  double width = std::max(span / 10.0, 1e-6);

  // rates strictly inside (0,1) are what pins the logistic shape; with
  // none (a pure step) the midpoint is unidentified inside the gap
  int interior = 0;
  for (double p : rate)
    if (p > 0.01 && p < 0.99) ++interior;

  // Levenberg-Marquardt on the two-parameter logistic
  double lambda = 1e-3;
  bool converged = false;
  auto chi2_at = [&](double c, double w) {
    double s = 0.0;
    for (int i = 0; i < npts; ++i) {
      const double r = rate[i] - logistic(rho[i], c, w);
      s += weight[i] * r * r;
    }
    return s;
  };
  double chi2 = chi2_at(center, width);
  Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
  for (int it = 0; interior >= 2 && it < 200; ++it) {
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    jtj.setZero();
    for (int i = 0; i < npts; ++i) {
      const double f = logistic(rho[i], center, width);
      const double s = (rho[i] - center) / width;
      const double df_dc = f * (1.0 - f) / width;
      const double df_dw = f * (1.0 - f) * s / width;
      const double r = rate[i] - f;
      Eigen::Vector2d grad(df_dc, df_dw);
      jtj += weight[i] * grad * grad.transpose();
      jtr += weight[i] * r * grad;
    }
    Eigen::Matrix2d damped = jtj;
    damped(0, 0) *= 1.0 + lambda;
    damped(1, 1) *= 1.0 + lambda;
    const Eigen::Vector2d step = damped.ldlt().solve(jtr);
    if (!step.allFinite()) break;
    const double c_new = center + step(0);
    double w_new = width + step(1);
    if (w_new < 1e-9) w_new = 1e-9;
    const double chi2_new = chi2_at(c_new, w_new);
    if (chi2_new <= chi2) {
      const bool small = std::abs(step(0)) < 1e-12 * std::max(1.0, std::abs(center)) &&
                         std::abs(step(1)) < 1e-10;
      center = c_new;
      width = w_new;
      chi2 = chi2_new;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (small) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  CriticalEstimate est;
  est.rho_c = center;
  est.width = width;
  // a collapsed width means the data look like a step: the logistic
  // midpoint is not identified, so fall back to the crossing
  if (width <= 1e-8) converged = false;
  if (converged) {
    const double dof = std::max(npts - 2, 1);
    const double sigma2 = chi2 / dof;
    const Eigen::Matrix2d cov = jtj.inverse() * sigma2;
    est.std_error = std::sqrt(std::max(cov(0, 0), 0.0));
  } else {
    // fit degenerated (for instance a perfect step): fall back to the
    // interpolated crossing with a binomial error propagated through the
    // local slope
    est.rho_c =
        rho[cross] + (rate[cross] - 0.5) / (rate[cross] - rate[cross + 1]) *
                         (rho[cross + 1] - rho[cross]);
    const double slope = (rate[cross] - rate[cross + 1]) /
                         (rho[cross + 1] - rho[cross]);
    const double p_mid = 0.5;
    const double binom =
        std::sqrt(p_mid * (1.0 - p_mid) / std::max(weight[cross], 1.0));
    est.std_error = slope > 0.0 ? binom / slope : 0.0;
    est.width = slope > 0.0 ? 1.0 / (4.0 * slope) : 0.0;
  }
  return est;
}

ExtrapolationFit finite_size_extrapolate(
    const std::vector<int>& sizes,
    const std::vector<CriticalEstimate>& points) {
  if (sizes.size() != points.size())
    throw std::domain_error("finite_size_extrapolate: size/point count mismatch");
  std::vector<int> distinct = sizes;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 5)
    throw EstimationError("finite_size_extrapolate: need at least 5 distinct sizes");

  const int npts = static_cast<int>(sizes.size());
  Eigen::MatrixXd design(npts, 4);
  Eigen::VectorXd y(npts), sqrt_w(npts);
  ExtrapolationFit fit;
  for (int i = 0; i < npts; ++i) {
    const double x = 1.0 / static_cast<double>(sizes[i]);
    design(i, 0) = 1.0;
    design(i, 1) = x;
    design(i, 2) = x * x;
    design(i, 3) = x * x * x;
    y(i) = points[i].rho_c;
    sqrt_w(i) = 1.0 / std::max(points[i].std_error, 1e-12);
    fit.abscissas.push_back(x);
    fit.rho_c.push_back(points[i].rho_c);
    fit.std_errors.push_back(points[i].std_error);
  }
  // uniform weights when no point carries a meaningful error bar
  if (sqrt_w.maxCoeff() > 1e11) sqrt_w.setOnes();

  const Eigen::MatrixXd xw = sqrt_w.asDiagonal() * design;
  const Eigen::VectorXd yw = sqrt_w.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  if (qr.rank() < 4)
    throw EstimationError("finite_size_extrapolate: rank-deficient design");
  const Eigen::VectorXd a = qr.solve(yw);

  const Eigen::VectorXd residual = yw - xw * a;
  fit.residual_norm = residual.norm();
  for (int k = 0; k < 4; ++k) fit.coeffs[k] = a(k);
  fit.intercept = a(0);

  const double dof = std::max(npts - 4, 1);
  const double chi2_red = residual.squaredNorm() / dof;
  const Eigen::Matrix4d normal = (xw.transpose() * xw);
  const Eigen::Matrix4d cov = normal.inverse() * std::max(chi2_red, 1.0);
  fit.intercept_std_error = std::sqrt(std::max(cov(0, 0), 0.0));
  return fit;
}

std::string kind_label(randmat::DictionaryKind kind) {
  return kind == randmat::DictionaryKind::bi_orthogonal ? "bi-orthogonal"
                                                        : "iid-gaussian";
}

randmat::DictionaryKind kind_from_label(const std::string& label) {
  if (label == "bi-orthogonal") return randmat::DictionaryKind::bi_orthogonal;
  if (label == "iid-gaussian") return randmat::DictionaryKind::iid_gaussian;
  throw std::domain_error("unknown dictionary kind: " + label);
}

void write_curves_csv(const std::string& path, const ExperimentConfig& config,
                      const std::vector<SuccessCurve>& curves) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "kind,mu,N,rho,trials,successes,success_rate\n";
  for (const SuccessCurve& curve : curves) {
    for (const CurvePoint& p : curve.points) {
      out << kind_label(config.kind) << ',' << full_precision(config.mu) << ','
          << curve.n << ',' << full_precision(p.rho) << ',' << p.trials << ','
          << p.successes << ',' << full_precision(p.success_rate) << '\n';
    }
  }
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

void write_fit_csv(const std::string& path, const ExperimentConfig& config,
                   const ExtrapolationFit& fit) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "kind,mu,abscissa,rho_c,stderr\n";
  for (std::size_t i = 0; i < fit.abscissas.size(); ++i) {
    out << kind_label(config.kind) << ',' << full_precision(config.mu) << ','
        << full_precision(fit.abscissas[i]) << ','
        << full_precision(fit.rho_c[i]) << ','
        << full_precision(fit.std_errors[i]) << '\n';
  }
  out << "# intercept=" << full_precision(fit.intercept) << " coeffs="
      << full_precision(fit.coeffs[0]) << ',' << full_precision(fit.coeffs[1])
      << ',' << full_precision(fit.coeffs[2]) << ','
      << full_precision(fit.coeffs[3]) << '\n';
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::vector<SuccessCurve>& curves) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = kind_label(config.kind);
  doc["mu"] = config.mu;
  doc["sizes"] = config.sizes;
  doc["rhos"] = config.rhos;
  doc["trials"] = config.trials;
  doc["master_seed"] = config.master_seed;
  doc["recovery_tol"] = config.recovery_tol;
  nlohmann::json flagged = nlohmann::json::array();
  for (const SuccessCurve& curve : curves) {
    for (const CurvePoint& p : curve.points) {
      if (p.lp_failures > 0) {
        flagged.push_back({{"N", curve.n},
                           {"rho", p.rho},
                           {"lp_failures", p.lp_failures},
                           {"flagged", p.flagged}});
      }
    }
  }
  doc["lp_failures"] = flagged;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

LoadedCurves load_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "kind,mu,N,rho,trials,successes,success_rate")
    throw std::runtime_error("bad curves CSV header in " + path);

  LoadedCurves loaded;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, field;
    std::getline(ss, kind, ',');
    std::getline(ss, field, ',');
    const double mu = std::stod(field);
    std::getline(ss, field, ',');
    const int n = std::stoi(field);
    CurvePoint p;
    std::getline(ss, field, ',');
    p.rho = std::stod(field);
    std::getline(ss, field, ',');
    p.trials = std::stol(field);
    std::getline(ss, field, ',');
    p.successes = std::stol(field);
    std::getline(ss, field, ',');
    p.success_rate = std::stod(field);
    if (first) {
      loaded.kind = kind;
      loaded.mu = mu;
      first = false;
    }
    if (loaded.curves.empty() || loaded.curves.back().n != n) {
      SuccessCurve c;
      c.n = n;
      loaded.curves.push_back(c);
    }
    loaded.curves.back().points.push_back(p);
  }
  return loaded;
}

LoadedFit load_fit_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "kind,mu,abscissa,rho_c,stderr")
    throw std::runtime_error("bad fit CSV header in " + path);

  LoadedFit loaded;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# intercept=", 0) == 0) {
      std::stringstream ss(line.substr(std::string("# intercept=").size()));
      ss >> loaded.fit.intercept;
      std::string rest;
      ss >> rest;  // "coeffs=a0,a1,a2,a3"
      const std::string prefix = "coeffs=";
      if (rest.rfind(prefix, 0) == 0) {
        std::stringstream cs(rest.substr(prefix.size()));
        std::string field;
        for (int k = 0; k < 4 && std::getline(cs, field, ','); ++k)
          loaded.fit.coeffs[k] = std::stod(field);
      }
      continue;
    }
    std::stringstream ss(line);
    std::string kind, field;
    std::getline(ss, kind, ',');
    std::getline(ss, field, ',');
    const double mu = std::stod(field);
    if (first) {
      loaded.kind = kind;
      loaded.mu = mu;
      first = false;
    }
    std::getline(ss, field, ',');
    loaded.fit.abscissas.push_back(std::stod(field));
    std::getline(ss, field, ',');
    loaded.fit.rho_c.push_back(std::stod(field));
    std::getline(ss, field, ',');
    loaded.fit.std_errors.push_back(std::stod(field));
  }
  return loaded;
}

}  // namespace biortho::experiment
