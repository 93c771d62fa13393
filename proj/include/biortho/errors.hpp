#pragma once

#include <stdexcept>
#include <string>

namespace biortho {

/// An iterative routine ran out of iterations; carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Adaptive quadrature could not reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved_error() const { return achieved_; }

 private:
  double achieved_;
};

/// A curve does not satisfy the preconditions of an estimator.
class EstimationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace biortho
