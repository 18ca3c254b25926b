// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_INFERENCE_HPP_
#define GELCAL_INFERENCE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "gelcal/fitting.hpp"

namespace gelcal {

/// Pieces of the asymptotic-variance plug-in for the calibration estimator:
/// adjusted predictions m_tilde, the A2 vector and the S matrix built from
/// the propensity score derivatives.
struct VariancePlugin {
  Vector m_tilde_hat;  // per unit
  Vector a2_hat;
  Matrix s_hat;
  double variance = 0.0;
  double se = 0.0;
  std::vector<std::string> warnings;
};

/// Plug-in variance of the calibration estimator under a correctly
/// specified missingness model:
///   A2 = N^{-1} sum r_i pi_i^{-2} (dpi/dbeta)_i (y_i - m_i)
///   S  = N^{-1} sum pi_i^{-1} (1-pi_i)^{-1} (dpi/dbeta)_i (dpi/dbeta)_i'
///   m_tilde_i = m_i - A2' S^{-1} (1-pi_i)^{-1} (dpi/dbeta)_i
///   var = N^{-2} sum [ r_i/pi_i (y_i - m_tilde_i) + (m_tilde_i - mu_hat) ]^2.
/// Throws NotPositiveDefinite when S is singular; propensities within 1e-6
/// of 0/1 are reported as warnings.
VariancePlugin plugin_variance(const ObservedSample& sample,
                               const PropensityFit& propensity,
                               const BestLinearPredictorFit& blp,
                               double cal_estimate);

/// Standard normal quantile, accurate to better than 1e-10.
double normal_quantile(double p);

/// value +/- z_{(1+level)/2} * se.
std::pair<double, double> wald_ci(double value, double se, double level = 0.95);

}  // namespace gelcal

#endif  // GELCAL_INFERENCE_HPP_
