// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_CALIBRATION_HPP_
#define GELCAL_CALIBRATION_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gelcal/data.hpp"
#include "gelcal/fitting.hpp"
#include "gelcal/rho.hpp"

namespace gelcal {

/// Inputs of a calibration weight solve: calibration functions u evaluated
/// at every unit, their full-sample means, the nonmissing indicators and
/// the inverse propensities of the complete cases.
struct CalibrationProblem {
  Matrix u;                       // n x q
  Vector u_bar;                   // full-sample column means of u
  std::vector<std::uint8_t> r;
  Vector base_weights;            // 1/pi(x_i; beta_hat), length n
  RhoFunction rho = RhoFunction::quadratic();

  void validate() const;
};

/// Convenience constructor from fitted pieces.
CalibrationProblem make_calibration_problem(const ObservedSample& sample,
                                            const Matrix& u,
                                            const PropensityFit& propensity,
                                            const RhoFunction& rho);

/// Open interval V for the restricted maximization, bounding every
/// complete-case v = lambda' (u - u_bar).  The interval must keep rho'
/// sign-definite, which is what makes all weights non-negative.
///
/// A default-constructed box adapts to the rho family when the solve runs:
/// each finite edge of the region where rho' keeps its sign (and v stays
/// in the domain) is pulled in by a 0.9 margin, e.g. v < 0.9 for empirical
/// likelihood and v > -0.9 for the quadratic; edges that need no bound are
/// left wide open.
struct FeasibilityBox {
  double v_lo = std::numeric_limits<double>::quiet_NaN();  // NaN: adapt to rho
  double v_hi = std::numeric_limits<double>::quiet_NaN();

  bool adaptive() const { return std::isnan(v_lo) || std::isnan(v_hi); }
  static FeasibilityBox adapted_to(const RhoFunction& rho);
};

struct CalibrationOptions {
  double gradient_tol = 1e-8;
  double residual_tol = 1e-8;
  int max_iter = 100;
};

struct CalibrationResult {
  Vector lambda_hat;       // q entries, on the original u scale
  Vector weights;          // length n; zero where r=0
  Vector moment_residual;  // u_bar - sum_i r_i p_i u(x_i)
  bool restricted = false; // a feasibility box constrained the search
  NewtonReport newton;
  double weight_sum = 0.0; // sum of r_i p_i
  std::vector<int> dropped_columns;  // centered-constant u columns (lambda=0)
  std::vector<std::string> warnings;
};

/// Calibration weights through the concave dual: lambda_hat maximizes
///   sum_i r_i pi^{-1}(x_i) rho(lambda' (u(x_i) - u_bar))
/// and the weights are p_i proportional to pi^{-1} rho'(lambda' (u-u_bar)),
/// normalized over complete cases.  With a box supplied, trial iterates
/// that push any complete-case v outside V are rejected.
CalibrationResult solve_lambda(const CalibrationProblem& problem,
                               const std::optional<FeasibilityBox>& box =
                                   FeasibilityBox{},
                               const CalibrationOptions& opts = {});

/// Explicit inverse-Gram solution available for the quadratic rho:
///   lambda = -[sum r pi^{-1} (u-u_bar)(u-u_bar)']^{-1} [sum r pi^{-1} (u-u_bar)].
CalibrationResult solve_lambda_quadratic_closed_form(
    const CalibrationProblem& problem, const CalibrationOptions& opts = {});

/// Centered-moment variant: lambda_2 maximizes
///   sum_i rho(r_i lambda' (pi^{-1}(x_i) u(x_i) - u_bar))
/// with weights pi^{-1} rho'(v_i) scaled by the complete-case sum of
/// rho'(v_j); u must contain a constant column, whose first-order condition
/// pins sum_i r_i p*_i = 1.
CalibrationResult solve_centered(const CalibrationProblem& problem,
                                 const CalibrationOptions& opts = {});

struct WeightDiagnostics {
  double min_weight = 0.0;
  double max_weight = 0.0;
  Eigen::Index negative_count = 0;
  double effective_sample_size = 0.0;  // (sum p)^2 / sum p^2
  double max_moment_residual = 0.0;
  double weight_sum = 0.0;
};

WeightDiagnostics weight_diagnostics(const CalibrationResult& result,
                                     const std::vector<std::uint8_t>& r);

}  // namespace gelcal

#endif  // GELCAL_CALIBRATION_HPP_
