// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_ENGINE_HPP_
#define GELCAL_ENGINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gelcal/estimators.hpp"
#include "gelcal/inference.hpp"

namespace gelcal {

/// One estimator requested on a sample: which point estimator, which rho,
/// the missingness model and the working outcome models feeding it.
struct EstimatorSpec {
  enum class Kind { Ipw, IpwHajek, Aipw, Ols, Cal, Cal2, Oracle };

  Kind kind = Kind::Cal;
  std::string label;                 // row label; derived from kind when empty
  std::string rho = "quadratic";     // parse_rho name (Cal/Cal2 only)
  bool use_box = true;
  std::optional<FormulaSpec> propensity;   // response must be "r"
  std::vector<FormulaSpec> working;        // response "y" -> least squares,
                                           // I(y cmp c) -> logistic
  bool attach_se = false;            // plug-in variance and CI (Cal only)
  double ci_level = 0.95;
  std::vector<double> oracle_values; // Kind::Oracle: one per estimand

  std::string display_label() const;
};

struct EvaluationOutput {
  std::vector<Estimate> estimates;   // one per estimand, aligned
  std::optional<WeightDiagnostics> weight_diag;  // Cal/Cal2 solves
  bool box_active = false;
};

/// Runs one estimator over a sample for each estimand.  Working models are
/// fitted once, the calibration problem is solved once, and the resulting
/// weight vector is shared across all estimands.  A sample without missing
/// responses short-circuits the propensity fit with unit probabilities.
EvaluationOutput evaluate_estimator(const ObservedSample& sample,
                                    const EstimatorSpec& spec,
                                    const std::vector<EstimandSpec>& estimands);

}  // namespace gelcal

#endif  // GELCAL_ENGINE_HPP_
