#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "biortho/randmat.hpp"

namespace biortho::lp {

/// min c'x  s.t.  Ax = b, x >= 0.
struct StandardFormLP {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = 0.0;
  long pivots = 0;
};

const char* to_string(LpStatus s);

class LpFailure : public std::runtime_error {
 public:
  LpFailure(const std::string& what, LpStatus status, std::uint64_t seed)
      : std::runtime_error(what), status_(status), seed_(seed) {}
  LpStatus status() const { return status_; }
  std::uint64_t seed() const { return seed_; }

 private:
  LpStatus status_;
  std::uint64_t seed_;
};

/// Basis-pursuit reformulation of an instance: x = x+ - x- with
/// x+, x- >= 0 gives A = [D, -D], b = y and an all-ones cost, so the LP
/// optimum equals min ||x||_1 subject to Dx = y.
StandardFormLP to_standard_form(const randmat::ProblemInstance& instance);

/// Two-phase revised simplex with a dense refactorized basis, Dantzig
/// pricing and Bland's rule after a pivot-count trigger.  Deterministic
/// for a given input.  Dependent rows are removed up front (with a
/// b-consistency check); an inconsistent dependency reports infeasible.
LpSolution simplex_solve(const StandardFormLP& lp, long max_pivots = 100000);

/// Brute-force oracle: enumerate every basis subset, keep the best
/// feasible basic solution.  Exponential; intended for m <= ~8.
LpSolution enumerate_basic_solutions(const StandardFormLP& lp);

/// Solve the l1 program for an instance.  Returns the signed estimate
/// x_hat (length 2M) and its l1 norm.  Throws LpFailure (with the
/// instance seed) when the simplex does not return an optimum or the
/// result is infeasible beyond 1e-8.
std::pair<Eigen::VectorXd, double> l1_reconstruct(
    const randmat::ProblemInstance& instance);

/// Perfect-recovery decision: mean squared error per component at most tol.
bool check_recovery(const Eigen::VectorXd& x_hat,
                    const Eigen::VectorXd& x_planted, double tol = 1e-8);

}  // namespace biortho::lp
