// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_FITTING_HPP_
#define GELCAL_FITTING_HPP_

#include <string>
#include <vector>

#include "gelcal/formula.hpp"

namespace gelcal {

struct FitOptions {
  double gradient_tol = 1e-8;
  int max_iter = 100;
  // fitted probabilities closer than this to 0/1 at convergence are treated
  // as evidence of (quasi-)separation
  double separation_tol = 1e-7;
};

/// Fitted missingness model pi(x; beta_hat).
struct PropensityFit {
  Vector beta;
  Vector pi;          // fitted probabilities for all n units, in (0,1)
  double score_norm = 0.0;
  std::vector<std::string> design_columns;
  Matrix design;      // n x p design used for the fit (intercept first)

  /// d pi / d beta at unit i: pi (1-pi) x_i for the logistic model.
  Vector dpi_dbeta(Eigen::Index i) const {
    return pi[i] * (1.0 - pi[i]) * design.row(i).transpose();
  }
};

/// Maximizes the Bernoulli likelihood of r on the formula features by
/// damped Newton; the score equation at the optimum has norm <= tol.
/// Throws Separation when fitted probabilities degenerate towards 0/1 and
/// RankDeficient when the design loses column rank.
PropensityFit fit_logistic_propensity(const ObservedSample& sample,
                                      const std::vector<FormulaTerm>& terms,
                                      const FitOptions& opts = {});

/// One fitted working outcome-regression model.
///
/// Besides its predictions, a model contributes calibration functions: a
/// least-squares model is summarized by its design columns (its prediction
/// span), a logistic model by its fitted probability, which is a genuinely
/// nonlinear function of the covariates.
struct FittedWorkingModel {
  enum class Family { Gaussian, Binary } family = Family::Gaussian;
  Vector gamma;
  Vector predictions;          // u_k(x_i; gamma_hat) for all n units
  Matrix calibration_columns;  // n x k_j calibration functions
  std::vector<std::string> design_columns;
  std::vector<std::string> calibration_labels;
  std::string label;
};

/// Ordinary least squares of y on the formula features over complete cases
/// (r=1); predictions are emitted for every unit.
FittedWorkingModel fit_working_ols(const ObservedSample& sample,
                                   const std::vector<FormulaTerm>& terms);

/// Complete-case logistic regression of I(y cmp threshold) on the formula
/// features; predictions are probabilities for every unit.
FittedWorkingModel fit_working_logistic(const ObservedSample& sample,
                                        const std::vector<FormulaTerm>& terms,
                                        Comparison cmp, double threshold,
                                        const FitOptions& opts = {});

/// q fitted working models with their n x q prediction matrix and the
/// stacked calibration functions all of them contribute.
struct WorkingModelSet {
  std::vector<FittedWorkingModel> models;
  Matrix predictions;
  Matrix calibration_matrix;  // n x (sum_j k_j)
  std::vector<std::string> calibration_labels;

  /// Assembles the matrices and verifies the complete-case centered Gram
  /// of the calibration functions is SPD (duplicated or collinear working
  /// models raise RankDeficient, never a silent result).
  static WorkingModelSet assemble(std::vector<FittedWorkingModel> models,
                                  const ObservedSample& sample);
};

enum class BlpWeighting { IpwWeighted, Unweighted };

/// Sample analogue of the population least-squares projection of y on
/// (1, u_1, ..., u_q), with u the calibration functions: complete-case
/// least squares with weights r_i/pi_i (IpwWeighted, the default) or unit
/// weights (Unweighted).
struct BestLinearPredictorFit {
  Vector c;      // (c_0, ..., c_q)
  Vector m_hat;  // c_0 + sum_j c_j u_j(x_i), all n units
};

BestLinearPredictorFit fit_best_linear_predictor(
    const ObservedSample& sample, const WorkingModelSet& working,
    const PropensityFit& propensity,
    BlpWeighting weighting = BlpWeighting::IpwWeighted);

}  // namespace gelcal

#endif  // GELCAL_FITTING_HPP_
