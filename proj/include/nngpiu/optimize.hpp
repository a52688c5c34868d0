#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace nngpiu {

/// Objective to maximize. Non-finite values are treated as infeasible.
using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central-difference gradient with per-coordinate step `step`.
Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double step);

struct BfgsOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-5;  // on the projected gradient, inf-norm
  double value_tolerance = 1e-9;     // relative change in the objective
  double fd_step = 1e-4;
  double max_step = 2.0;             // cap on any coordinate change per iteration
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Box-constrained quasi-Newton ascent: BFGS inverse-Hessian updates,
/// central-difference gradients, projection onto [lower, upper] and an
/// Armijo backtracking line search along the projected path. Never returns a
/// point with a lower objective than the (projected) start.
OptimizeResult maximize_bfgs_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, const BfgsOptions& options = {});

}  // namespace nngpiu
