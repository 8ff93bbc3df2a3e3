#pragma once

#include <Eigen/Dense>

#include <functional>

namespace vinetail {

struct MinimizeOptions {
  int max_iterations = 500;
  // Stop when |f_k - f_{k+1}| <= rel_tolerance * max(1, |f_k|).
  double rel_tolerance = 1e-8;
  double gradient_tolerance = 1e-7;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Central-difference gradient; non-finite objective values propagate as NaN.
Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x);

// BFGS quasi-Newton with numerical gradients and Armijo backtracking.
// Objective values of +inf are treated as infeasible and rejected by the
// line search.
MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opts = {});

// Bounded scalar minimisation (Brent).
struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
};
ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi);

// Root of a monotone function on [lo, hi] (TOMS 748 with bisection safeguard).
double solve_monotone(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13);

}  // namespace vinetail
