// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/numeric.hpp"

#include <cmath>

namespace gelcal {

Vector solve_spd(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw InvariantViolation("solve_spd: dimension mismatch");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale > 0.0 && (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvariantViolation("solve_spd: matrix not symmetric");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("solve_spd: non-positive pivot in Cholesky factorization");
  }
  Vector x = llt.solve(b);
  // one refinement pass keeps the relative residual near machine precision
  x += llt.solve(b - a * x);
  return x;
}

NewtonReport maximize_concave(const ConcaveObjective& objective,
                              const Vector& start,
                              const std::function<bool(const Vector&)>& feasible,
                              const NewtonOptions& opts) {
  if (feasible && !feasible(start)) {
    throw InvariantViolation("maximize_concave: start point infeasible");
  }

  NewtonReport report;
  Vector x = start;
  double fx = objective.value(x);
  Vector grad = objective.gradient(x);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    report.gradient_norm = grad.norm();
    if (report.gradient_norm <= opts.gradient_tol) {
      report.converged = true;
      break;
    }

    Vector direction;
    try {
      direction = solve_spd(-objective.hessian(x), grad);
    } catch (const NotPositiveDefinite&) {
      // fall back to steepest ascent when curvature information degenerates
      direction = grad;
    }

    double step = 1.0;
    const double slope = grad.dot(direction);
    // roundoff slack keeps the test meaningful when the true improvement
    // falls below the resolution of |f| near the optimum
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(fx);
    bool accepted = false;
    while (step >= opts.min_step) {
      Vector trial = x + step * direction;
      if (!feasible || feasible(trial)) {
        const double ft = objective.value(trial);
        if (std::isfinite(ft) && ft >= fx + opts.armijo * step * slope - noise) {
          x = std::move(trial);
          fx = ft;
          accepted = true;
          break;
        }
        if (step == 1.0) {
          // near the optimum the true gain drops below the evaluation noise
          // of f; the full Newton step still contracts the gradient, which
          // the objective comparison cannot see
          const Vector gt = objective.gradient(trial);
          if (gt.norm() <= 0.5 * grad.norm() && std::isfinite(ft)) {
            x = std::move(trial);
            fx = ft;
            accepted = true;
            break;
          }
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (opts.throw_on_stall) {
        throw LineSearchStalled("maximize_concave: step size underflow (near-degenerate design)");
      }
      break;
    }

    grad = objective.gradient(x);
    ++report.iterations;
  }

  report.gradient_norm = grad.norm();
  if (report.gradient_norm <= opts.gradient_tol) report.converged = true;
  report.argmax = std::move(x);
  report.objective_value = fx;
  return report;
}

}  // namespace gelcal
