#include "biortho/specfun.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "biortho/errors.hpp"

namespace biortho::specfun {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887;
constexpr double kTwoPi = 6.2831853071795864769252868;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

double gaussian_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

QuadratureRule QuadratureRule::gauss_hermite(int n) {
  if (n < 1) throw std::domain_error("gauss_hermite: need at least one node");
  // Golub-Welsch: symmetric tridiagonal Jacobi matrix of the probabilists'
  // Hermite polynomials has zero diagonal and off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;  // measure already normalized, mu_0 = 1
  }
  return rule;
}

double q_function(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("q_inverse: argument must lie in (0,1)");
  if (p == 0.5) return 0.0;

  // Work on the lower tail (q <= 1/2) and restore the sign afterwards.
  const bool flipped = p > 0.5;
  const double q = flipped ? 1.0 - p : p;

  // Rational starting guess (Abramowitz & Stegun 26.2.23), |err| < 4.5e-4.
  const double t = std::sqrt(-2.0 * std::log(q));
  double x = t - (2.30753 + 0.27061 * t) /
                     (1.0 + t * (0.99229 + t * 0.04481));

  // Safeguarded Newton on Q(x) - q; Q is strictly decreasing.
  double lo = 0.0, hi = 60.0;
  for (int it = 0; it < 100; ++it) {
    const double f = q_function(x) - q;
    if (f > 0.0)
      lo = x;
    else
      hi = x;
    const double deriv = -gaussian_pdf(x);
    double step = f / deriv;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double delta = std::abs(next - x);
    x = next;
    if (delta <= 1e-13 * std::max(1.0, std::abs(x))) break;
  }
  return flipped ? -x : x;
}

double r_func(double h) {
  if (h < 0.0) throw std::domain_error("r_func: argument must be >= 0");
  // both terms are O(exp(-1/(2h))) as h -> 0+, far below double resolution
  if (h < 1e-8) return 0.0;
  return std::sqrt(h / kTwoPi) * std::exp(-0.5 / h) -
         (1.0 + h) * q_function(1.0 / std::sqrt(h));
}

PhiResult phi(double h, double q_hat) {
  if (!(q_hat > 0.0))
    throw std::domain_error("phi: q_hat must be positive (objective unbounded otherwise)");
  const double mag = std::abs(h);
  if (mag <= 1.0) return {0.0, 0.0};
  const double excess = mag - 1.0;
  const double minimizer = (h > 0.0 ? excess : -excess) / q_hat;
  return {-excess * excess / (2.0 * q_hat), minimizer};
}

double integrate_gaussian(const std::function<double(double)>& f,
                          const QuadratureRule& rule) {
  if (rule.nodes.empty()) throw std::domain_error("integrate_gaussian: empty rule");
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

namespace {

// Gauss-Kronrod 7/15 pair, positive half (QUADPACK dqk15 constants).
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
  double integral;
  double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f_center = f(center);
  double kronrod = kKronrodWeights[7] * f_center;
  double gauss = kGaussWeights[3] * f_center;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {kronrod, std::abs(kronrod - gauss)};
}

struct Panel {
  double a, b, integral, error;
};

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, double rel_tol) {
  std::vector<Panel> panels;
  PanelResult whole = gk15(f, a, b);
  panels.push_back({a, b, whole.integral, whole.error});

  const int max_panels = 20000;
  while (static_cast<int>(panels.size()) < max_panels) {
    double total = 0.0, total_error = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].integral;
      total_error += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (total_error <= std::max(abs_tol, rel_tol * std::abs(total)))
      return total;
    Panel split = panels[worst];
    const double mid = 0.5 * (split.a + split.b);
    if (mid <= split.a || mid >= split.b) {
      // interval no longer splittable in double precision
      panels[worst].error = 0.0;
      continue;
    }
    PanelResult left = gk15(f, split.a, mid);
    PanelResult right = gk15(f, mid, split.b);
    panels[worst] = {split.a, mid, left.integral, left.error};
    panels.push_back({mid, split.b, right.integral, right.error});
  }

  double total = 0.0, total_error = 0.0;
  for (const Panel& p : panels) {
    total += p.integral;
    total_error += p.error;
  }
  if (total_error <= std::max(abs_tol, rel_tol * std::abs(total))) return total;
  throw QuadratureError("integrate_adaptive: tolerance not reached", total_error);
}

double integrate_gaussian_adaptive(const std::function<double(double)>& f,
                                   double abs_tol, double z_max) {
  auto weighted = [&f](double z) { return f(z) * gaussian_pdf(z); };
  // split at 0 so a kink of an even integrand never sits on a panel center
  return integrate_adaptive(weighted, -z_max, 0.0, 0.5 * abs_tol, 1e-13) +
         integrate_adaptive(weighted, 0.0, z_max, 0.5 * abs_tol, 1e-13);
}

}  // namespace biortho::specfun
