// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_NUMERIC_HPP_
#define GELCAL_NUMERIC_HPP_

#include <Eigen/Dense>
#include <functional>

#include "gelcal/errors.hpp"

namespace gelcal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Solve a * x = b for symmetric positive-definite a by Cholesky
/// factorization, with one step of iterative refinement.
/// Throws NotPositiveDefinite when a pivot is non-positive (collinear
/// calibration functions or a separated propensity fit upstream).
Vector solve_spd(const Matrix& a, const Vector& b);

struct NewtonOptions {
  double gradient_tol = 1e-8;
  int max_iter = 100;
  double armijo = 1e-4;
  double min_step = 1e-14;
  // When false a stalled line search returns the current report with
  // converged=false instead of throwing LineSearchStalled.
  bool throw_on_stall = true;
};

struct NewtonReport {
  Vector argmax;
  double objective_value = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// A smooth concave objective with analytic gradient and Hessian.
struct ConcaveObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

/// Damped Newton ascent with backtracking (halving) line search.
///
/// Trial iterates outside the feasible region (as reported by `feasible`)
/// are rejected and the step is halved; the start point must be feasible.
/// Terminates when the gradient norm reaches `opts.gradient_tol` or after
/// `opts.max_iter` accepted iterations.
NewtonReport maximize_concave(
    const ConcaveObjective& objective, const Vector& start,
    const std::function<bool(const Vector&)>& feasible = nullptr,
    const NewtonOptions& opts = {});

}  // namespace gelcal

#endif  // GELCAL_NUMERIC_HPP_
