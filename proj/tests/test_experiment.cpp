#include "biortho/experiment.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <string>

#include "biortho/errors.hpp"
#include "biortho/lp.hpp"
#include "biortho/randmat.hpp"

using namespace biortho;
using namespace biortho::experiment;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.kind = randmat::DictionaryKind::bi_orthogonal;
  config.mu = 0.0;
  config.sizes = {16};
  config.rhos = {0.2};
  config.trials = 100;
  config.master_seed = 91;
  config.threads = 1;
  return config;
}

SuccessCurve synthetic_curve(const std::vector<double>& rhos,
                             const std::vector<double>& rates, long trials) {
  SuccessCurve curve;
  curve.n = 0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    CurvePoint p;
    p.rho = rhos[i];
    p.trials = trials;
    p.successes = static_cast<long>(std::lround(rates[i] * trials));
    p.success_rate = static_cast<double>(p.successes) / trials;
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace

TEST_CASE("run_trials is deterministic and order independent") {
  auto config = small_config();
  const auto a = run_trials(config, 16, 0);
  const auto b = run_trials(config, 16, 0);
  CHECK(a.successes == b.successes);
  CHECK(a.trials == b.trials);
  CHECK(a.lp_failures == b.lp_failures);

  config.threads = 2;  // different parallelism, identical counts
  const auto c = run_trials(config, 16, 0);
  CHECK(a.successes == c.successes);
  CHECK(a.lp_failures == c.lp_failures);
}

TEST_CASE("counts re-aggregate across split trial ranges") {
  auto config = small_config();
  config.trials = 60;
  const auto full = run_trials(config, 16, 0);

  // recompute the second half directly from the per-trial seeds
  config.trials = 30;
  const auto first_half = run_trials(config, 16, 0);
  long second_half = 0;
  const auto profile = replica::SparsityProfile::make(config.mu, config.rhos[0]);
  for (long t = 30; t < 60; ++t) {
    const auto inst = randmat::build_instance(
        8, profile, config.kind, trial_seed(config.master_seed, 16, 0, t));
    const auto [x_hat, obj] = lp::l1_reconstruct(inst);
    if (lp::check_recovery(x_hat, inst.signal.concatenated())) ++second_half;
  }
  CHECK(full.successes == first_half.successes + second_half);
}

TEST_CASE("success rate limits at the edges of the density range") {
  auto config = small_config();
  config.rhos = {0.003, 0.45};
  config.trials = 200;
  const auto nearly_empty = run_trials(config, 16, 0);
  CHECK(nearly_empty.success_rate >= 0.99);
  const auto dense = run_trials(config, 32, 1);
  CHECK(dense.success_rate < 0.5);
}

TEST_CASE("config validation") {
  auto config = small_config();
  config.sizes = {15};
  CHECK_THROWS_AS(config.validate(), std::domain_error);
  config = small_config();
  config.rhos = {0.6};
  CHECK_THROWS_AS(config.validate(), std::domain_error);
  config = small_config();
  config.trials = 0;
  CHECK_THROWS_AS(config.validate(), std::domain_error);
  CHECK_THROWS_AS(run_trials(small_config(), 16, 3), std::domain_error);
}

TEST_CASE("critical density of an exact step curve") {
  const auto curve = synthetic_curve({0.14, 0.16, 0.18, 0.22, 0.24, 0.26},
                                     {1, 1, 1, 0, 0, 0}, 1000);
  const auto est = critical_density_estimate(curve);
  CHECK(est.rho_c == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("critical density recovers a noiseless logistic midpoint") {
  std::vector<double> rhos, rates;
  for (int i = 0; i < 13; ++i) {
    const double rho = 0.14 + 0.01 * i;
    rhos.push_back(rho);
    rates.push_back(1.0 / (1.0 + std::exp((rho - 0.2) / 0.015)));
  }
  const auto est = critical_density_estimate(synthetic_curve(rhos, rates, 1000000));
  CHECK(std::abs(est.rho_c - 0.2) <= 1e-6);
  CHECK(est.width == doctest::Approx(0.015).epsilon(1e-3));
}

TEST_CASE("estimation preconditions") {
  // reversed (increasing) curve
  CHECK_THROWS_AS(critical_density_estimate(synthetic_curve(
                      {0.1, 0.2, 0.3}, {0.0, 0.5, 1.0}, 100)),
                  EstimationError);
  // no bracket: all rates above 1/2
  CHECK_THROWS_AS(critical_density_estimate(synthetic_curve(
                      {0.1, 0.2, 0.3}, {1.0, 0.95, 0.9}, 100)),
                  EstimationError);
}

TEST_CASE("transitions sharpen with system size") {
  ExperimentConfig config;
  config.mu = 0.0;
  config.sizes = {16, 44};
  config.rhos = {0.16, 0.19, 0.22, 0.25, 0.28, 0.31, 0.34};
  config.trials = 400;
  config.master_seed = 5150;
  config.threads = 2;
  const auto small_curve = success_curve(config, 16);
  const auto large_curve = success_curve(config, 44);
  const auto small_est = critical_density_estimate(small_curve);
  const auto large_est = critical_density_estimate(large_curve);
  CHECK(large_est.width < small_est.width);
}

TEST_CASE("cubic extrapolation reproduces exact synthetic data") {
  const std::array<double, 4> truth{0.21, -0.4, 2.0, -5.0};
  std::vector<int> sizes;
  std::vector<CriticalEstimate> points;
  for (int n = 16; n <= 50; n += 2) {
    const double x = 1.0 / n;
    CriticalEstimate e;
    e.rho_c = truth[0] + truth[1] * x + truth[2] * x * x + truth[3] * x * x * x;
    e.std_error = 1e-3;
    sizes.push_back(n);
    points.push_back(e);
  }
  const auto fit = finite_size_extrapolate(sizes, points);
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(fit.coeffs[k] - truth[k]) <= 1e-10);
  CHECK(std::abs(fit.intercept - 0.21) <= 1e-10);
  CHECK(fit.residual_norm <= 1e-9);
}

TEST_CASE("cubic extrapolation of a constant is the constant") {
  std::vector<int> sizes;
  std::vector<CriticalEstimate> points;
  for (int n = 16; n <= 40; n += 4) {
    sizes.push_back(n);
    points.push_back({0.2, 1e-3, 0.0});
  }
  const auto fit = finite_size_extrapolate(sizes, points);
  CHECK(std::abs(fit.intercept - 0.2) <= 1e-10);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(fit.coeffs[k]) <= 1e-8);
}

TEST_CASE("extrapolation needs at least five distinct sizes") {
  std::vector<int> sizes{16, 18, 20, 22};
  std::vector<CriticalEstimate> points(4, CriticalEstimate{0.2, 1e-3, 0.0});
  CHECK_THROWS_AS(finite_size_extrapolate(sizes, points), EstimationError);
}

TEST_CASE("persistence round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "biortho_test_io";
  fs::create_directories(dir);

  ExperimentConfig config;
  config.kind = randmat::DictionaryKind::bi_orthogonal;
  config.mu = 0.25;
  config.sizes = {16, 18};
  config.rhos = {0.1, 0.2, 0.321};
  config.trials = 50;
  config.master_seed = 424242;
  config.threads = 1;
  const auto curves = run_experiment(config);

  const std::string curves_path = (dir / "curves.csv").string();
  write_curves_csv(curves_path, config, curves);
  const auto loaded = load_curves_csv(curves_path);
  CHECK(loaded.kind == "bi-orthogonal");
  CHECK(loaded.mu == config.mu);
  REQUIRE(loaded.curves.size() == curves.size());
  std::size_t rows = 0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    CHECK(loaded.curves[i].n == curves[i].n);
    REQUIRE(loaded.curves[i].points.size() == curves[i].points.size());
    for (std::size_t j = 0; j < curves[i].points.size(); ++j) {
      const auto& a = curves[i].points[j];
      const auto& b = loaded.curves[i].points[j];
      CHECK(a.rho == b.rho);  // 17 significant digits round-trip exactly
      CHECK(a.trials == b.trials);
      CHECK(a.successes == b.successes);
      CHECK(a.success_rate == b.success_rate);
      ++rows;
    }
  }
  CHECK(rows == config.sizes.size() * config.rhos.size());

  // manifest echoes the configuration
  const std::string manifest_path = (dir / "curves.csv.manifest.json").string();
  write_manifest(manifest_path, config, curves);
  std::ifstream manifest(manifest_path);
  std::string text((std::istreambuf_iterator<char>(manifest)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("\"master_seed\": 424242") != std::string::npos);

  // fit CSV round trip
  std::vector<int> sizes;
  std::vector<CriticalEstimate> points;
  for (int n = 16; n <= 32; n += 2) {
    sizes.push_back(n);
    points.push_back({0.2 + 0.3 / n, 2e-3, 0.01});
  }
  const auto fit = finite_size_extrapolate(sizes, points);
  const std::string fit_path = (dir / "fit.csv").string();
  write_fit_csv(fit_path, config, fit);
  const auto fit_loaded = load_fit_csv(fit_path);
  CHECK(fit_loaded.fit.intercept == fit.intercept);
  for (int k = 0; k < 4; ++k) CHECK(fit_loaded.fit.coeffs[k] == fit.coeffs[k]);
  REQUIRE(fit_loaded.fit.abscissas.size() == fit.abscissas.size());
  for (std::size_t i = 0; i < fit.abscissas.size(); ++i) {
    CHECK(fit_loaded.fit.abscissas[i] == fit.abscissas[i]);
    CHECK(fit_loaded.fit.rho_c[i] == fit.rho_c[i]);
    CHECK(fit_loaded.fit.std_errors[i] == fit.std_errors[i]);
  }

  fs::remove_all(dir);
}

TEST_CASE("smoke run finishes quickly") {
  ExperimentConfig config;
  config.sizes = {16};
  config.rhos = {0.2};
  config.trials = 10;
  config.master_seed = 3;
  config.threads = 1;
  const auto start = std::chrono::steady_clock::now();
  const auto curves = run_experiment(config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  CHECK(curves.at(0).points.at(0).trials == 10);
  CHECK(seconds < 1.0);
}
