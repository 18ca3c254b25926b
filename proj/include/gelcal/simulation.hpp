// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_SIMULATION_HPP_
#define GELCAL_SIMULATION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gelcal/engine.hpp"

namespace gelcal {

// ---------------------------------------------------------------------------
// Kang-Schafer scenario
// ---------------------------------------------------------------------------

struct KangSchaferConfig {
  Eigen::Index n = 1000;
  bool interaction = false;  // add 20 z1 z2 to the mean of y
  std::uint64_t seed = 0;
};

struct ScenarioReplicate {
  FullSample full;          // y fully observed; covariates z1..z4, x1..x4
  ObservedSample observed;  // y masked by the missingness draw
};

/// The observed-covariate transforms x(z).
Eigen::Vector4d kang_schafer_transform(const Eigen::Vector4d& z);

/// Linear predictor of the missingness logit: -z1 + 0.5 z2 - 0.25 z3 - 0.1 z4.
double kang_schafer_missingness_logit(const Eigen::Vector4d& z);

/// Draws z ~ N(0, I4), y ~ N(210 + 27.4 z1 + 13.7 (z2+z3+z4) [+ 20 z1 z2], 1)
/// and r ~ Bernoulli(logit^{ -1}(eta0(z))).  Deterministic given the seed.
ScenarioReplicate generate_kang_schafer(const KangSchaferConfig& config);

/// True value of an estimand under the scenario (mean 210 exactly; tail
/// probabilities available analytically for the no-interaction design).
double kang_schafer_truth(const EstimandSpec& estimand, bool interaction);

// ---------------------------------------------------------------------------
// Monte Carlo driver
// ---------------------------------------------------------------------------

struct McRow {
  std::string estimator;
  std::string estimand;
  double bias = 0.0;
  double sse = 0.0;    // sampling standard deviation
  double rmse = 0.0;
  std::optional<double> re_rmse_vs_ols;  // RMSE / RMSE(ols)
  std::optional<double> re_mse_vs_ipw;   // MSE / MSE(ipw)
  std::optional<double> see;             // averaged standard error estimate
  std::optional<double> coverage;        // CI coverage fraction
  int n_reps = 0;
  int failed_reps = 0;
};

/// Worst-case calibration diagnostics accumulated over every solve of a run.
struct SolveAudit {
  double max_moment_residual = 0.0;
  double max_weight_sum_dev = 0.0;
  double min_weight_boxed = std::numeric_limits<double>::infinity();
  long solves = 0;

  void absorb(const WeightDiagnostics& diag, bool boxed);
  void merge(const SolveAudit& other);
};

struct McTable {
  std::vector<McRow> rows;
  std::uint64_t base_seed = 0;
  int n_reps = 0;
  Eigen::Index n = 0;
  SolveAudit audit;
};

struct McStudyConfig {
  KangSchaferConfig scenario;  // scenario.seed is unused; replicate k draws
                               // from base_seed + k
  int n_reps = 1000;
  std::uint64_t base_seed = 20260101;
  int parallelism = 1;
  std::vector<EstimandSpec> estimands = {EstimandSpec::mean()};
};

/// Runs the estimator grid across replicates (replicate k uses seed
/// base_seed+k) and aggregates bias / SSE / RMSE / RE / coverage per
/// estimator and estimand.  Per-replicate estimator failures are counted in
/// failed_reps and excluded.  Results are bit-identical for any parallelism.
McTable run_mc_study(const McStudyConfig& config,
                     const std::vector<EstimatorSpec>& grid);

/// Nested working-model study: calibration sets (a) u1, (b) (u1,u2),
/// (c) (u1,u2,u3), (d) (u1..u4) with u_j the least-squares fit on z1..zj,
/// under correct (z) and misspecified (x) missingness, for each rho name.
McTable run_nested_models_study(Eigen::Index n, int n_reps, std::uint64_t seed,
                                int parallelism,
                                const std::vector<std::string>& rhos = {
                                    "quadratic", "el", "et"});

// ---------------------------------------------------------------------------
// Resampling study on a fully observed dataset
// ---------------------------------------------------------------------------

struct ResamplingRow {
  std::string estimator;
  std::string estimand;
  double rb_pct = 0.0;  // percentage relative bias against the full sample
  double mse = 0.0;
  std::optional<double> re_vs_ipw;  // MSE / MSE(ipw)
  int n_reps = 0;
  int failed_reps = 0;
};

struct ResamplingTable {
  std::vector<ResamplingRow> rows;
  std::vector<double> full_sample_values;  // per estimand
  std::uint64_t base_seed = 0;
  int n_reps = 0;
  SolveAudit audit;
};

struct ResamplingConfig {
  FormulaSpec truth_missingness;  // response "r"; defines the masking model
  Vector truth_beta;              // coefficients (intercept first)
  int s_reps = 1000;
  std::uint64_t base_seed = 20260101;
  int parallelism = 1;
  std::vector<EstimandSpec> estimands = {EstimandSpec::mean()};
};

/// Repeatedly masks y by the truth missingness model and tabulates RB% and
/// RE against the full-sample values, per the resampling protocol.
ResamplingTable resampling_study(const FullSample& full, const ResamplingConfig& config,
                                 const std::vector<EstimatorSpec>& grid);

}  // namespace gelcal

#endif  // GELCAL_SIMULATION_HPP_
