// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_ESTIMATORS_HPP_
#define GELCAL_ESTIMATORS_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gelcal/calibration.hpp"

namespace gelcal {

struct Estimate {
  double value = 0.0;
  std::string method;
  std::optional<double> se;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  Eigen::Index n_complete = 0;
  std::vector<std::string> notes;
};

/// What to estimate: E(Y), P(Y>c), or a Riemann-Stieltjes grid
/// approximation of E(h(Y)).
struct EstimandSpec {
  enum class Kind { Mean, TailProbability, FunctionalGrid } kind = Kind::Mean;
  double c = 0.0;                      // threshold for TailProbability
  std::function<double(double)> h;     // FunctionalGrid integrand
  std::vector<double> cutpoints;       // strictly increasing, finite

  static EstimandSpec mean();
  static EstimandSpec tail_probability(double c);
  static EstimandSpec functional_grid(std::function<double(double)> h,
                                      std::vector<double> cutpoints);

  double apply(double y) const;  // h_l(y) for Mean/TailProbability
  std::string label() const;
};

/// mu_IPW = N^{-1} sum r_i / pi_i y_i.  The Hajek variant replaces the
/// denominator N with sum r_i/pi_i.
Estimate estimate_ipw(const ObservedSample& sample, const PropensityFit& propensity,
                      bool hajek = false);

/// Augmented IPW with outcome predictions m_hat for all units:
/// N^{-1} sum r_i/pi_i y_i - N^{-1} sum (r_i - pi_i)/pi_i m_hat(x_i).
Estimate estimate_aipw(const ObservedSample& sample, const PropensityFit& propensity,
                       const Vector& m_hat);

/// Mean of the outcome predictions over all units.
Estimate estimate_ols(const ObservedSample& sample, const Vector& m_hat);

/// Calibration-weighted complete-case mean sum r_i p_i y_i; serves both the
/// plain and the centered weight variants.
Estimate estimate_cal(const ObservedSample& sample, const CalibrationResult& calibration);

/// Applies one common weight set to every estimand.
std::vector<Estimate> multipurpose_estimate(const ObservedSample& sample,
                                            const CalibrationResult& calibration,
                                            const std::vector<EstimandSpec>& estimands);

/// Discrete approximation of E(h(Y)) over the intervals defined by the
/// cutpoints: interior intervals evaluate h at their midpoint, the two
/// unbounded tails at their finite endpoint.  Intervals that capture zero
/// weighted mass are reported in the estimate's notes.
Estimate functional_grid_approx(const ObservedSample& sample,
                                const CalibrationResult& calibration,
                                const std::function<double(double)>& h,
                                const std::vector<double>& cutpoints);

/// Just-identified estimating function with analytic Jacobian.
struct EstimatingFunction {
  std::function<Vector(double y, const Vector& x, const Vector& theta)> g;
  std::function<Matrix(double y, const Vector& x, const Vector& theta)> jacobian;
  Eigen::Index dim = 0;
};

/// Newton root of g_CAL(theta) = sum r_i p_i g(y_i, x_i; theta) = 0.
/// Point estimates only; no variance is attached.
std::vector<Estimate> solve_estimating_equation(const ObservedSample& sample,
                                                const CalibrationResult& calibration,
                                                const EstimatingFunction& g,
                                                const Vector& theta0,
                                                int max_iter = 100,
                                                double tol = 1e-10);

}  // namespace gelcal

#endif  // GELCAL_ESTIMATORS_HPP_
