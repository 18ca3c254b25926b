// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_STUDIES_HPP_
#define GELCAL_STUDIES_HPP_

#include "gelcal/simulation.hpp"

namespace gelcal {

// Estimator grids for the Kang-Schafer comparison tables.  "Misspecified"
// swaps the z covariates for the observed x transforms in every model.

/// IPW, AIPW, OLS and the six calibration variants (quadratic/el/et, each
/// doubly robust with one working model or multiply robust with two).
std::vector<EstimatorSpec> ks_comparison_grid(bool misspecified);

/// Calibration estimators with plug-in standard errors attached.
std::vector<EstimatorSpec> ks_coverage_grid(bool misspecified);

/// Common-weight study: IPW and calibration to m1 (linear model for y),
/// m2 (logistic model for I(y>240)) or both, under the correct or the
/// misspecified missingness model.
std::vector<EstimatorSpec> ks_multipurpose_grid(bool misspecified);

/// Formula text helpers shared by the grids.
std::string ks_propensity_formula(bool misspecified);
std::string ks_outcome_formula(bool misspecified);
std::string ks_extra_outcome_formula(bool misspecified);  // the MR add-on

}  // namespace gelcal

#endif  // GELCAL_STUDIES_HPP_
