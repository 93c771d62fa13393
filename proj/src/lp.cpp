#include "biortho/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace biortho::lp {

namespace {

constexpr double kOptTol = 1e-10;    // reduced-cost threshold
constexpr double kPivotTol = 1e-11;  // ratio-test denominator threshold
constexpr double kFeasTol = 1e-9;

// Gaussian elimination on [A|b]: returns indices of independent rows.
// A dependent row whose reduced b entry stays nonzero marks the system
// inconsistent (returns false).
bool independent_rows(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                      std::vector<int>* keep) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Eigen::MatrixXd work(m, n + 1);
  work.leftCols(n) = a;
  work.col(n) = b;
  std::vector<int> row_order(m);
  for (int i = 0; i < m; ++i) row_order[i] = i;

  int rank = 0;
  for (int col = 0; col < n && rank < m; ++col) {
    int pivot = -1;
    double best = 1e-12;
    for (int i = rank; i < m; ++i) {
      if (std::abs(work(i, col)) > best) {
        best = std::abs(work(i, col));
        pivot = i;
      }
    }
    if (pivot < 0) continue;
    work.row(pivot).swap(work.row(rank));
    std::swap(row_order[pivot], row_order[rank]);
    for (int i = rank + 1; i < m; ++i) {
      const double f = work(i, col) / work(rank, col);
      if (f != 0.0) work.row(i) -= f * work.row(rank);
    }
    ++rank;
  }
  for (int i = rank; i < m; ++i) {
    if (std::abs(work(i, n)) > kFeasTol) return false;  // 0 = nonzero
  }
  keep->assign(row_order.begin(), row_order.begin() + rank);
  std::sort(keep->begin(), keep->end());
  return true;
}

// Revised simplex over the fixed constraint matrix [A | I]; the cost and
// the set of priceable columns change between phases.
class SimplexCore {
 public:
  SimplexCore(Eigen::MatrixXd work, Eigen::VectorXd rhs, long max_pivots,
              long bland_after)
      : work_(std::move(work)),
        rhs_(std::move(rhs)),
        max_pivots_(max_pivots),
        bland_after_(bland_after) {}

  std::vector<int>& basis() { return basis_; }
  const Eigen::VectorXd& basic_values() const { return x_basic_; }
  long pivots() const { return pivots_; }

  double tableau_entry(int row, int col) const {
    return basis_inverse_.row(row).dot(work_.col(col));
  }

  void refactor() {
    const int m = static_cast<int>(work_.rows());
    Eigen::MatrixXd bmat(m, m);
    for (int i = 0; i < m; ++i) bmat.col(i) = work_.col(basis_[i]);
    basis_inverse_ = bmat.partialPivLu().inverse();
    x_basic_ = basis_inverse_ * rhs_;
  }

  LpStatus minimize(const Eigen::VectorXd& cost, int n_priced) {
    const int m = static_cast<int>(work_.rows());
    std::vector<char> is_basic(work_.cols(), 0);
    for (int j : basis_) is_basic[j] = 1;

    refactor();
    long since_refactor = 0;
    while (true) {
      if (pivots_ >= max_pivots_) return LpStatus::iteration_limit;
      Eigen::VectorXd c_basis(m);
      for (int i = 0; i < m; ++i) c_basis(i) = cost(basis_[i]);
      const Eigen::VectorXd multipliers = basis_inverse_.transpose() * c_basis;

      const bool bland = pivots_ >= bland_after_;
      int enter = -1;
      double most_negative = -kOptTol;
      for (int j = 0; j < n_priced; ++j) {
        if (is_basic[j]) continue;
        const double reduced = cost(j) - multipliers.dot(work_.col(j));
        if (reduced < most_negative) {
          most_negative = reduced;
          enter = j;
          if (bland) break;  // first eligible index
        }
      }
      if (enter < 0) return LpStatus::optimal;

      Eigen::VectorXd direction = basis_inverse_ * work_.col(enter);
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (direction(i) <= kPivotTol) continue;
        const double ratio = std::max(x_basic_(i), 0.0) / direction(i);
        if (ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 &&
             (leave < 0 || basis_[i] < basis_[leave]))) {
          best_ratio = std::min(ratio, best_ratio);
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::unbounded;

      // a nearly singular update pivot: rebuild the inverse and retry once
      if (std::abs(direction(leave)) < 1e-8 && since_refactor > 0) {
        refactor();
        since_refactor = 0;
        continue;
      }

      is_basic[basis_[leave]] = 0;
      is_basic[enter] = 1;
      basis_[leave] = enter;
      ++pivots_;

      if (++since_refactor >= 64) {
        refactor();
        since_refactor = 0;
      } else {
        // product-form update of the explicit inverse
        const double pivot = direction(leave);
        const Eigen::RowVectorXd pivot_row = basis_inverse_.row(leave) / pivot;
        direction(leave) = 0.0;
        basis_inverse_.noalias() -= direction * pivot_row;
        basis_inverse_.row(leave) = pivot_row;
        x_basic_ = basis_inverse_ * rhs_;
      }
    }
  }

 private:
  Eigen::MatrixXd work_;
  Eigen::VectorXd rhs_;
  long max_pivots_;
  long bland_after_;
  std::vector<int> basis_;
  Eigen::MatrixXd basis_inverse_;
  Eigen::VectorXd x_basic_;
  long pivots_ = 0;
};

}  // namespace

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

StandardFormLP to_standard_form(const randmat::ProblemInstance& instance) {
  const auto m = instance.dictionary.rows();
  const auto n = instance.dictionary.cols();
  if (instance.observation.size() != m)
    throw std::domain_error("to_standard_form: dictionary/observation mismatch");
  StandardFormLP lp;
  lp.A.resize(m, 2 * n);
  lp.A.leftCols(n) = instance.dictionary;
  lp.A.rightCols(n) = -instance.dictionary;
  lp.b = instance.observation;
  lp.c = Eigen::VectorXd::Ones(2 * n);
  return lp;
}

LpSolution simplex_solve(const StandardFormLP& lp, long max_pivots) {
  const int n = static_cast<int>(lp.A.cols());
  if (lp.b.size() != lp.A.rows() || lp.c.size() != n)
    throw std::domain_error("simplex_solve: inconsistent LP dimensions");

  LpSolution result;
  result.x = Eigen::VectorXd::Zero(n);

  std::vector<int> keep;
  if (!independent_rows(lp.A, lp.b, &keep)) {
    result.status = LpStatus::infeasible;
    return result;
  }

  const int m = static_cast<int>(keep.size());
  if (m == 0) {  // no effective constraints
    result.status = (lp.c.array() >= 0.0).all() ? LpStatus::optimal
                                                : LpStatus::unbounded;
    result.objective = 0.0;
    return result;
  }

  // reduced rows with b >= 0, plus the artificial identity block
  Eigen::MatrixXd work(m, n + m);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const double sign = lp.b(keep[i]) < 0.0 ? -1.0 : 1.0;
    work.row(i).head(n) = sign * lp.A.row(keep[i]);
    rhs(i) = sign * lp.b(keep[i]);
  }
  work.rightCols(m) = Eigen::MatrixXd::Identity(m, m);

  SimplexCore core(std::move(work), rhs, max_pivots,
                   /*bland_after=*/200 + 10L * (n + m));
  core.basis().resize(m);
  for (int i = 0; i < m; ++i) core.basis()[i] = n + i;

  Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
  phase1_cost.tail(m).setOnes();
  const LpStatus phase1 = core.minimize(phase1_cost, n);
  result.pivots = core.pivots();
  if (phase1 == LpStatus::iteration_limit || phase1 == LpStatus::unbounded) {
    result.status = LpStatus::iteration_limit;
    return result;
  }

  core.refactor();
  double artificial_sum = 0.0;
  for (int i = 0; i < m; ++i)
    if (core.basis()[i] >= n) artificial_sum += std::abs(core.basic_values()(i));
  if (artificial_sum > kFeasTol) {
    result.status = LpStatus::infeasible;
    return result;
  }

  // drive leftover (degenerate) artificials out; a pivot entry always
  // exists because the kept rows are independent
  for (int i = 0; i < m; ++i) {
    if (core.basis()[i] < n) continue;
    int enter = -1;
    for (int j = 0; j < n && enter < 0; ++j) {
      bool basic = false;
      for (int k = 0; k < m; ++k)
        if (core.basis()[k] == j) basic = true;
      if (!basic && std::abs(core.tableau_entry(i, j)) > kPivotTol) enter = j;
    }
    if (enter < 0)
      throw std::logic_error("simplex_solve: dependent row survived preprocessing");
    core.basis()[i] = enter;
    core.refactor();
  }

  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(n + m);
  phase2_cost.head(n) = lp.c;
  const LpStatus phase2 = core.minimize(phase2_cost, n);
  result.pivots = core.pivots();
  result.status = phase2;
  if (phase2 != LpStatus::optimal) return result;

  core.refactor();
  for (int i = 0; i < m; ++i) {
    double v = core.basic_values()(i);
    if (v < 0.0 && v > -kFeasTol) v = 0.0;  // roundoff at degenerate vertices
    if (core.basis()[i] < n) result.x(core.basis()[i]) = v;
  }
  result.objective = lp.c.dot(result.x);
  return result;
}

LpSolution enumerate_basic_solutions(const StandardFormLP& lp) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  LpSolution best;
  best.status = LpStatus::infeasible;
  best.objective = std::numeric_limits<double>::infinity();
  best.x = Eigen::VectorXd::Zero(n);

  std::vector<int> subset(m);
  for (int i = 0; i < m; ++i) subset[i] = i;

  auto advance = [&]() {
    int i = m - 1;
    while (i >= 0 && subset[i] == n - m + i) --i;
    if (i < 0) return false;
    ++subset[i];
    for (int k = i + 1; k < m; ++k) subset[k] = subset[k - 1] + 1;
    return true;
  };

  Eigen::MatrixXd bmat(m, m);
  do {
    for (int i = 0; i < m; ++i) bmat.col(i) = lp.A.col(subset[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd xb = lu.solve(lp.b);
    if ((xb.array() < -kFeasTol).any()) continue;
    double obj = 0.0;
    for (int i = 0; i < m; ++i) obj += lp.c(subset[i]) * xb(i);
    if (obj < best.objective) {
      best.objective = obj;
      best.status = LpStatus::optimal;
      best.x.setZero();
      for (int i = 0; i < m; ++i) best.x(subset[i]) = xb(i);
    }
  } while (advance());
  return best;
}

std::pair<Eigen::VectorXd, double> l1_reconstruct(
    const randmat::ProblemInstance& instance) {
  const StandardFormLP lp = to_standard_form(instance);
  const LpSolution sol = simplex_solve(lp);
  if (sol.status != LpStatus::optimal)
    throw LpFailure("l1_reconstruct: simplex returned " +
                        std::string(to_string(sol.status)) + " (seed " +
                        std::to_string(instance.seed) + ")",
                    sol.status, instance.seed);
  const auto n = instance.dictionary.cols();
  const Eigen::VectorXd x_hat = sol.x.head(n) - sol.x.tail(n);
  const double residual =
      (instance.dictionary * x_hat - instance.observation).cwiseAbs().maxCoeff();
  if (residual > 1e-8)
    throw LpFailure("l1_reconstruct: infeasible optimum, |Dx-y| = " +
                        std::to_string(residual) + " (seed " +
                        std::to_string(instance.seed) + ")",
                    sol.status, instance.seed);
  return {x_hat, x_hat.lpNorm<1>()};
}

bool check_recovery(const Eigen::VectorXd& x_hat,
                    const Eigen::VectorXd& x_planted, double tol) {
  if (x_hat.size() != x_planted.size())
    throw std::domain_error("check_recovery: length mismatch");
  const double mse =
      (x_hat - x_planted).squaredNorm() / static_cast<double>(x_hat.size());
  return mse <= tol;
}

}  // namespace biortho::lp
