#pragma once

#include <Eigen/Dense>
#include <functional>

namespace foagp {

/// Objective returning f(x); writes the gradient when `grad` is non-null.
/// Infeasible points are reported as +infinity.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct OptimizeOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;  // absolute objective improvement
  int history = 8;          // L-BFGS memory
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with projection onto the box [lower, upper] and a backtracking
/// Armijo line search. Needs gradients.
OptimizeResult minimize_lbfgs(const Objective& f, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const OptimizeOptions& options);

/// Nelder-Mead simplex search clamped to the box. Derivative-free.
OptimizeResult minimize_simplex(const Objective& f, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const OptimizeOptions& options);

}  // namespace foagp
