#include "nngpiu/optimize.hpp"

#include "nngpiu/errors.hpp"

#include <cmath>
#include <limits>

namespace nngpiu {

namespace {

// Minimization is simpler to reason about; the public entry point negates.
struct Counted {
  const Objective& f;
  int evaluations = 0;
  double operator()(const Eigen::VectorXd& x) {
    ++evaluations;
    const double v = -f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }
};

Eigen::VectorXd gradient_of(Counted& g, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = g(probe);
    probe(i) = x(i) - step;
    const double down = g(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Coordinates pinned at a bound with the descent direction pointing outward.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                                 const Eigen::VectorXd& lower,
                                                 const Eigen::VectorXd& upper) {
  Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    active(i) = (x(i) <= lower(i) && g(i) > 0.0) || (x(i) >= upper(i) && g(i) < 0.0);
  }
  return active;
}

}  // namespace

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = f(probe);
    probe(i) = x(i) - step;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

OptimizeResult maximize_bfgs_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, const BfgsOptions& options) {
  const Eigen::Index p = x0.size();
  if (lower.size() != p || upper.size() != p) throw InputError("bound vectors have the wrong size");
  if ((lower.array() > upper.array()).any()) throw InputError("lower bound above upper bound");

  Counted g{f};
  OptimizeResult result;
  Eigen::VectorXd x = project(std::move(x0), lower, upper);
  double fx = g(x);
  if (!std::isfinite(fx)) {
    result.x = x;
    result.value = -fx;
    result.evaluations = g.evaluations;
    result.message = "objective is not finite at the starting point";
    return result;
  }
  Eigen::VectorXd grad = gradient_of(g, x, options.fd_step);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(p, p);
  bool fresh_hessian = true;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const auto active = active_set(x, grad, lower, upper);
    Eigen::VectorXd free_grad = grad;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (active(i)) free_grad(i) = 0.0;
    }
    if (free_grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      result.converged = true;
      result.message = "projected gradient below tolerance";
      break;
    }

    Eigen::VectorXd dir = -(H * free_grad);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (active(i)) dir(i) = 0.0;
    }
    if (dir.dot(free_grad) >= 0.0) {
      H.setIdentity();
      fresh_hessian = true;
      dir = -free_grad;
    }
    const double longest = dir.lpNorm<Eigen::Infinity>();
    if (longest > options.max_step) dir *= options.max_step / longest;

    double t = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    while (t > 1e-10) {
      x_new = project(x + t * dir, lower, upper);
      f_new = g(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * grad.dot(x_new - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!fresh_hessian) {
        H.setIdentity();
        fresh_hessian = true;
        continue;
      }
      result.converged = true;
      result.message = "line search made no progress";
      break;
    }

    const Eigen::VectorXd grad_new = gradient_of(g, x_new, options.fd_step);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = grad_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0) {
      if (fresh_hessian) {
        // Scale the initial inverse Hessian to the observed curvature.
        H *= sy / yv.squaredNorm();
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
      fresh_hessian = false;
    }

    const double change = fx - f_new;
    x = x_new;
    fx = f_new;
    grad = grad_new;
    if (change < options.value_tolerance * (1.0 + std::abs(fx))) {
      result.converged = true;
      result.message = "objective change below tolerance";
      ++it;
      break;
    }
  }
  if (it >= options.max_iterations && !result.converged) result.message = "iteration limit reached";

  result.x = x;
  result.value = -fx;
  result.iterations = it;
  result.evaluations = g.evaluations;
  return result;
}

}  // namespace nngpiu
