#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "biortho/errors.hpp"
#include "biortho/experiment.hpp"
#include "biortho/haarint.hpp"
#include "biortho/lp.hpp"
#include "biortho/randmat.hpp"
#include "biortho/replica.hpp"
#include "biortho/rng.hpp"
#include "biortho/specfun.hpp"

namespace {

constexpr int kExitNumerical = 2;

std::string fp(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BIORTHO_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 1;
}

void print_solution(const biortho::replica::ReplicaSolution& sol) {
  std::cout << "rho_critical " << fp(sol.rho_critical) << "\n"
            << "chi_hat_1 " << fp(sol.chi_hat_1) << "\n"
            << "chi_hat_2 " << fp(sol.chi_hat_2) << "\n"
            << "eta " << fp(sol.eta) << "\n"
            << "iterations " << sol.iterations << "\n"
            << "residual " << fp(sol.residual) << "\n";
}

int cmd_threshold(double mu, const std::string& ensemble, double tol,
                  const std::string& json_path) {
  std::cout << "# threshold ensemble=" << ensemble << " mu=" << fp(mu)
            << " tol=" << fp(tol) << "\n";
  biortho::replica::SolverConfig cfg;
  cfg.tolerance = tol;
  try {
    const auto sol = ensemble == "rotinv"
                         ? biortho::replica::solve_rot_invariant_threshold(cfg)
                         : biortho::replica::solve_bi_orthogonal_threshold(mu, cfg);
    print_solution(sol);
    if (!json_path.empty()) {
      nlohmann::json doc{{"ensemble", ensemble},
                         {"mu", mu},
                         {"rho_critical", sol.rho_critical},
                         {"chi_hat_1", sol.chi_hat_1},
                         {"chi_hat_2", sol.chi_hat_2},
                         {"eta", sol.eta},
                         {"iterations", sol.iterations},
                         {"residual", sol.residual}};
      std::ofstream out(json_path);
      out << doc.dump(2) << '\n';
    }
    return 0;
  } catch (const biortho::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (residual " << fp(e.residual())
              << ")\n";
    return kExitNumerical;
  }
}

int cmd_sweep(int grid_points, const std::string& out_path, double tol) {
  std::cout << "# sweep grid-points=" << grid_points << " out=" << out_path
            << " tol=" << fp(tol) << "\n";
  biortho::replica::SolverConfig cfg;
  cfg.tolerance = tol;
  const auto rotinv = biortho::replica::solve_rot_invariant_threshold(cfg);

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  out << "mu,rho_critical,chi_hat_1,chi_hat_2,eta,rho_rotinv,status\n";
  bool any_failed = false;
  for (int i = 0; i < grid_points; ++i) {
    const double mu = grid_points == 1
                          ? 0.0
                          : static_cast<double>(i) / (grid_points - 1);
    try {
      const auto sol = biortho::replica::solve_bi_orthogonal_threshold(mu, cfg);
      out << fp(mu) << ',' << fp(sol.rho_critical) << ',' << fp(sol.chi_hat_1)
          << ',' << fp(sol.chi_hat_2) << ',' << fp(sol.eta) << ','
          << fp(rotinv.rho_critical) << ",ok\n";
    } catch (const biortho::ConvergenceError& e) {
      any_failed = true;
      out << fp(mu) << ",,,,," << fp(rotinv.rho_critical) << ",failed\n";
      std::cerr << "error at mu=" << fp(mu) << ": " << e.what() << "\n";
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return any_failed ? kExitNumerical : 0;
}

int cmd_simulate(const biortho::experiment::ExperimentConfig& config,
                 const std::string& out_path) {
  using biortho::experiment::kind_label;
  std::cout << "# simulate kind=" << kind_label(config.kind)
            << " mu=" << fp(config.mu) << " trials=" << config.trials
            << " seed=" << config.master_seed << " threads=" << config.threads
            << "\n# sizes:";
  for (int n : config.sizes) std::cout << ' ' << n;
  std::cout << "\n# rhos:";
  for (double r : config.rhos) std::cout << ' ' << fp(r);
  std::cout << "\n";

  const auto curves = biortho::experiment::run_experiment(config);
  biortho::experiment::write_curves_csv(out_path, config, curves);
  biortho::experiment::write_manifest(out_path + ".manifest.json", config,
                                      curves);
  std::cout << "wrote " << out_path << " and " << out_path
            << ".manifest.json\n";
  bool any_flagged = false;
  for (const auto& curve : curves)
    for (const auto& p : curve.points)
      if (p.flagged) {
        any_flagged = true;
        std::cerr << "flagged: N=" << curve.n << " rho=" << fp(p.rho) << " ("
                  << p.lp_failures << " LP failures)\n";
      }
  return any_flagged ? kExitNumerical : 0;
}

int cmd_extrapolate(const std::string& curves_path,
                    const std::string& out_path) {
  std::cout << "# extrapolate curves=" << curves_path << " out=" << out_path
            << "\n";
  const auto loaded = biortho::experiment::load_curves_csv(curves_path);
  std::vector<int> sizes;
  std::vector<biortho::experiment::CriticalEstimate> estimates;
  for (const auto& curve : loaded.curves) {
    try {
      estimates.push_back(biortho::experiment::critical_density_estimate(curve));
      sizes.push_back(curve.n);
      std::cout << "N=" << curve.n << " rho_c=" << fp(estimates.back().rho_c)
                << " stderr=" << fp(estimates.back().std_error) << "\n";
    } catch (const biortho::EstimationError& e) {
      std::cerr << "error at N=" << curve.n << ": " << e.what() << "\n";
      return kExitNumerical;
    }
  }
  try {
    const auto fit = biortho::experiment::finite_size_extrapolate(sizes, estimates);
    biortho::experiment::ExperimentConfig echo;
    echo.kind = biortho::experiment::kind_from_label(loaded.kind);
    echo.mu = loaded.mu;
    biortho::experiment::write_fit_csv(out_path, echo, fit);
    std::cout << "intercept " << fp(fit.intercept) << "\n"
              << "intercept_stderr " << fp(fit.intercept_std_error) << "\n"
              << "wrote " << out_path << "\n";
    return 0;
  } catch (const biortho::EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

struct SuiteReport {
  std::string name;
  double max_deviation;
  double allowed;
  bool passed;
};

SuiteReport verify_specfun(std::uint64_t seed) {
  biortho::RandomStream rng(seed);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const double chi_hat = 1e-3 + 50.0 * rng.uniform();
    const double q_hat = 0.01 + 49.99 * rng.uniform();
    const double m_hat = 7.0 * rng.uniform();
    const double rho = 0.5 * rng.uniform();
    const double h2 = m_hat * m_hat + chi_hat;
    const double lhs = biortho::specfun::integrate_gaussian_adaptive(
        [&](double z) {
          return (1.0 - rho) *
                     biortho::specfun::phi(z * std::sqrt(chi_hat), q_hat).value +
                 rho * biortho::specfun::phi(z * std::sqrt(h2), q_hat).value;
        },
        1e-12);
    const double rhs = ((1.0 - rho) * biortho::specfun::r_func(chi_hat) +
                        rho * biortho::specfun::r_func(h2)) /
                       q_hat;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return {"specfun integral identity", worst, 1e-8, worst <= 1e-8};
}

SuiteReport verify_haarint() {
  double worst_ratio = 0.0;  // gap normalized by its own 10/M bound
  for (int m : {100, 200, 400}) {
    for (double r1 : {0.5, 1.0, 2.0})
      for (double r2 : {0.5, 1.0, 2.0})
        for (double c : {0.5, 1.0, 2.0}) {
          const double gap = std::abs(biortho::haarint::i_m_quadrature(m, r1, r2, c) -
                                      biortho::haarint::f_haar(r1, r2, c));
          worst_ratio = std::max(worst_ratio, gap * m / 10.0);
        }
  }
  return {"haarint finite-M gap / (10/M)", worst_ratio, 1.0, worst_ratio <= 1.0};
}

SuiteReport verify_replica() {
  double worst = 0.0;
  for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto iterated = biortho::replica::solve_bi_orthogonal_threshold(mu);
    const auto bisected = biortho::replica::solve_threshold_by_bisection(mu);
    worst = std::max(worst,
                     std::abs(iterated.rho_critical - bisected.rho_critical));
  }
  return {"replica solver vs nested bisection", worst, 1e-8, worst <= 1e-8};
}

SuiteReport verify_lp(std::uint64_t seed) {
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    const int m = 3 + static_cast<int>(i % 4);  // M in 3..6
    const auto profile = biortho::replica::SparsityProfile::make(1.0, 0.25);
    const auto instance = biortho::randmat::build_instance(
        m, profile, biortho::randmat::DictionaryKind::bi_orthogonal,
        biortho::RandomStream::derive(seed, {static_cast<std::uint64_t>(i)})
            .next_u64());
    const auto lp = biortho::lp::to_standard_form(instance);
    const auto fast = biortho::lp::simplex_solve(lp);
    const auto brute = biortho::lp::enumerate_basic_solutions(lp);
    if (fast.status != biortho::lp::LpStatus::optimal ||
        brute.status != biortho::lp::LpStatus::optimal) {
      ok = false;
      continue;
    }
    worst = std::max(worst, std::abs(fast.objective - brute.objective));
    const double residual =
        (lp.A * fast.x - lp.b).cwiseAbs().maxCoeff();
    const double planted_l1 = instance.signal.concatenated().lpNorm<1>();
    if (residual > 1e-8 || fast.objective > planted_l1 + 1e-9) ok = false;
  }
  return {"lp simplex vs exhaustive enumeration", worst, 1e-9,
          ok && worst <= 1e-9};
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  std::cout << "# verify suite=" << suite << " seed=" << seed << "\n";
  std::vector<SuiteReport> reports;
  if (suite == "specfun" || suite == "all") reports.push_back(verify_specfun(seed));
  if (suite == "haarint" || suite == "all") reports.push_back(verify_haarint());
  if (suite == "replica" || suite == "all") reports.push_back(verify_replica());
  if (suite == "lp" || suite == "all") reports.push_back(verify_lp(seed));

  bool all_passed = true;
  for (const auto& r : reports) {
    std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name
              << "  max deviation " << fp(r.max_deviation) << "\n";
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparsity thresholds for bi-orthogonal dictionaries: replica "
               "fixed points and Monte Carlo l1-recovery experiments"};
  app.require_subcommand(1);

  // threshold
  double mu = 1.0, tol = 1e-12;
  std::string ensemble = "biortho", json_path;
  auto* threshold = app.add_subcommand("threshold", "critical density at one mu");
  threshold->add_option("--mu", mu, "block imbalance in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  threshold->add_option("--ensemble", ensemble, "biortho or rotinv")
      ->check(CLI::IsMember({"biortho", "rotinv"}));
  threshold->add_option("--tol", tol, "fixed-point tolerance");
  threshold->add_option("--json", json_path, "also write the solution as JSON");

  // sweep
  int grid_points = 11;
  std::string sweep_out = "sweep.csv";
  double sweep_tol = 1e-12;
  auto* sweep = app.add_subcommand("sweep", "rho(mu) over a uniform mu grid");
  sweep->add_option("--grid-points", grid_points, "number of mu values")
      ->check(CLI::Range(2, 100000));
  sweep->add_option("--out", sweep_out, "output CSV path");
  sweep->add_option("--tol", sweep_tol, "fixed-point tolerance");

  // simulate
  biortho::experiment::ExperimentConfig config;
  config.master_seed = default_seed();
  std::string kind_name = "biortho", sim_out = "curves.csv";
  auto* simulate = app.add_subcommand("simulate",
                                      "Monte Carlo success curves at finite N");
  simulate->add_option("--mu", config.mu, "block imbalance in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--kind", kind_name, "dictionary kind")
      ->check(CLI::IsMember({"biortho", "iidgauss"}));
  simulate->add_option("--N-list", config.sizes, "system sizes N = 2M (even)")
      ->delimiter(',')
      ->required();
  simulate->add_option("--rho-list", config.rhos, "densities in (0, 1/2)")
      ->delimiter(',')
      ->required();
  simulate->add_option("--trials", config.trials, "trials per (N, rho) point");
  simulate->add_option("--seed", config.master_seed,
                       "master seed (default from BIORTHO_SEED)");
  simulate->add_option("--recovery-tol", config.recovery_tol,
                       "per-component MSE bound for success");
  simulate->add_option("--threads", config.threads,
                       "worker threads (0 = hardware)");
  simulate->add_option("--out", sim_out, "output CSV path");

  // extrapolate
  std::string curves_path, fit_out = "fit.csv";
  auto* extrapolate = app.add_subcommand(
      "extrapolate", "per-N critical densities and cubic 1/N extrapolation");
  extrapolate->add_option("--curves", curves_path, "curves CSV from simulate")
      ->required();
  extrapolate->add_option("--out", fit_out, "output fit CSV path");

  // verify
  std::string suite = "all";
  std::uint64_t verify_seed = default_seed();
  auto* verify = app.add_subcommand("verify", "oracle cross-checks per module");
  verify->add_option("--suite", suite, "which suite")
      ->check(CLI::IsMember({"specfun", "haarint", "replica", "lp", "all"}));
  verify->add_option("--seed", verify_seed, "seed for randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (threshold->parsed()) return cmd_threshold(mu, ensemble, tol, json_path);
    if (sweep->parsed()) return cmd_sweep(grid_points, sweep_out, sweep_tol);
    if (simulate->parsed()) {
      config.kind = kind_name == "iidgauss"
                        ? biortho::randmat::DictionaryKind::iid_gaussian
                        : biortho::randmat::DictionaryKind::bi_orthogonal;
      return cmd_simulate(config, sim_out);
    }
    if (extrapolate->parsed()) return cmd_extrapolate(curves_path, fit_out);
    if (verify->parsed()) return cmd_verify(suite, verify_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 1;
}
