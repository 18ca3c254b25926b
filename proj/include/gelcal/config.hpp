// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_CONFIG_HPP_
#define GELCAL_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gelcal/engine.hpp"

namespace gelcal {

/// A serializable estimand request.
struct EstimandConfig {
  std::string kind = "mean";           // mean | tail | grid
  double c = 0.0;                      // tail threshold
  std::vector<double> cutpoints;       // grid
  std::string h = "identity";          // grid integrand: identity | indicator
  double h_c = 0.0;                    // indicator threshold
  std::vector<std::pair<double, double>> h_table;  // tabulated h, linear interp

  EstimandSpec to_spec() const;
  bool operator==(const EstimandConfig&) const = default;
};

/// Full run configuration: schema-validated before any computation, and it
/// round-trips through JSON.
struct RunConfig {
  std::string workflow = "estimate";  // estimate | simulate | resample-study
  std::string input;
  std::string missing_token = "NA";
  std::string rho = "quadratic";
  bool box = true;
  std::string propensity;               // formula text
  std::vector<std::string> working;     // formula texts
  std::vector<EstimandConfig> estimands = {EstimandConfig{}};
  std::vector<std::string> estimators = {"cal"};  // ipw|ipw_hajek|aipw|ols|cal|cal2
  bool robustness_mode = false;  // treat the missingness model as suspect:
                                 // point estimates only, no plug-in SEs
  bool se = true;
  double ci_level = 0.95;
  std::uint64_t seed = 20260101;
  int reps = 1000;
  int parallelism = 1;
  std::string out;

  // simulate workflow
  int table = 1;
  Eigen::Index n = 1000;

  // resample-study workflow
  std::string truth_missingness;
  std::vector<double> truth_beta;
  std::string working_missingness;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const std::string& json_text);
std::string serialize_run_config(const RunConfig& config);

/// Estimator grid for the estimate / resample-study workflows.
std::vector<EstimatorSpec> build_estimator_grid(const RunConfig& config);

}  // namespace gelcal

#endif  // GELCAL_CONFIG_HPP_
