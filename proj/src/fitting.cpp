// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/fitting.hpp"

#include <cmath>

namespace gelcal {

namespace {

double log1pexp(double eta) {
  // log(1 + exp(eta)) without overflow
  if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
  return std::log1p(std::exp(eta));
}

Vector expit(const Vector& eta) {
  return eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
}

void require_full_rank(const Matrix& design, const char* where) {
  Eigen::LLT<Matrix> llt(design.transpose() * design);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient(std::string(where) + ": design matrix is rank deficient");
  }
}

// Bernoulli MLE by damped Newton on the mean log-likelihood.
struct LogisticFitResult {
  Vector beta;
  Vector pi;
  double score_norm;
};

LogisticFitResult fit_logistic(const Matrix& design, const Vector& response,
                               const FitOptions& opts, const char* where) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (n < p) {
    throw TooFewCompleteCases(std::string(where) + ": fewer rows than parameters");
  }
  require_full_rank(design, where);
  const double inv_n = 1.0 / static_cast<double>(n);

  ConcaveObjective objective;
  objective.value = [&](const Vector& beta) {
    const Vector eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      ll += response[i] * eta[i] - log1pexp(eta[i]);
    }
    return ll * inv_n;
  };
  objective.gradient = [&](const Vector& beta) {
    const Vector p_hat = expit(design * beta);
    return Vector(inv_n * (design.transpose() * (response - p_hat)));
  };
  objective.hessian = [&](const Vector& beta) {
    const Vector p_hat = expit(design * beta);
    const Vector w = p_hat.array() * (1.0 - p_hat.array());
    return Matrix(-inv_n * (design.transpose() * w.asDiagonal() * design));
  };

  NewtonOptions nopts;
  nopts.gradient_tol = opts.gradient_tol;
  nopts.max_iter = opts.max_iter;
  nopts.throw_on_stall = false;
  const NewtonReport report =
      maximize_concave(objective, Vector::Zero(p), nullptr, nopts);

  LogisticFitResult result;
  result.beta = report.argmax;
  result.pi = expit(design * result.beta);
  result.score_norm = report.gradient_norm;

  // the likelihood has no maximizer when a hyperplane classifies every
  // observation: the score then drifts to zero while beta escapes, so test
  // for perfect classification rather than for extreme fits alone
  const double delta = opts.separation_tol;
  bool all_classified = true;
  bool any_extreme = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool hi = result.pi[i] > 1.0 - delta;
    const bool lo = result.pi[i] < delta;
    any_extreme = any_extreme || hi || lo;
    const bool classified = response[i] > 0.5 ? hi : lo;
    all_classified = all_classified && classified;
  }
  if (all_classified || (!report.converged && any_extreme)) {
    throw Separation(std::string(where) +
                     ": data are separated, the likelihood has no maximizer");
  }
  if (!report.converged) {
    throw MaxIterations(std::string(where) + ": score equation not solved within " +
                        std::to_string(opts.max_iter) + " iterations");
  }
  return result;
}

}  // namespace

PropensityFit fit_logistic_propensity(const ObservedSample& sample,
                                      const std::vector<FormulaTerm>& terms,
                                      const FitOptions& opts) {
  const Matrix design = build_design(sample, terms);
  Vector response(sample.n);
  for (Eigen::Index i = 0; i < sample.n; ++i) response[i] = sample.r[i];

  LogisticFitResult fit = fit_logistic(design, response, opts, "fit_logistic_propensity");
  PropensityFit out;
  out.beta = std::move(fit.beta);
  out.pi = std::move(fit.pi);
  out.score_norm = fit.score_norm;
  out.design_columns = design_labels(terms);
  out.design = design;
  return out;
}

FittedWorkingModel fit_working_ols(const ObservedSample& sample,
                                   const std::vector<FormulaTerm>& terms) {
  const Matrix design = build_design(sample, terms);
  const Eigen::Index nc = sample.n_complete();
  if (nc < design.cols()) {
    throw TooFewCompleteCases("fit_working_ols: need at least " +
                              std::to_string(design.cols()) + " complete cases");
  }

  Matrix a = Matrix::Zero(design.cols(), design.cols());
  Vector b = Vector::Zero(design.cols());
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    const Vector row = design.row(i).transpose();
    a.noalias() += row * row.transpose();
    b.noalias() += row * sample.y[i];
  }
  Vector gamma;
  try {
    gamma = solve_spd(a, b);
  } catch (const NotPositiveDefinite&) {
    throw RankDeficient("fit_working_ols: design matrix is rank deficient on complete cases");
  }

  FittedWorkingModel model;
  model.family = FittedWorkingModel::Family::Gaussian;
  model.predictions = design * gamma;
  model.gamma = std::move(gamma);
  model.design_columns = design_labels(terms);
  model.calibration_columns = design.rightCols(design.cols() - 1);
  model.calibration_labels.assign(model.design_columns.begin() + 1,
                                  model.design_columns.end());
  return model;
}

FittedWorkingModel fit_working_logistic(const ObservedSample& sample,
                                        const std::vector<FormulaTerm>& terms,
                                        Comparison cmp, double threshold,
                                        const FitOptions& opts) {
  const Matrix design = build_design(sample, terms);
  const Eigen::Index nc = sample.n_complete();

  Matrix cc_design(nc, design.cols());
  Vector cc_response(nc);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    cc_design.row(k) = design.row(i);
    bool hit = false;
    switch (cmp) {
      case Comparison::Greater: hit = sample.y[i] > threshold; break;
      case Comparison::GreaterEq: hit = sample.y[i] >= threshold; break;
      case Comparison::Less: hit = sample.y[i] < threshold; break;
      case Comparison::LessEq: hit = sample.y[i] <= threshold; break;
    }
    cc_response[k] = hit ? 1.0 : 0.0;
    ++k;
  }

  LogisticFitResult fit =
      fit_logistic(cc_design, cc_response, opts, "fit_working_logistic");
  FittedWorkingModel model;
  model.family = FittedWorkingModel::Family::Binary;
  model.gamma = std::move(fit.beta);
  model.predictions =
      (design * model.gamma).unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  model.design_columns = design_labels(terms);
  model.calibration_columns = model.predictions;
  model.calibration_labels = {"p_hat"};
  return model;
}

WorkingModelSet WorkingModelSet::assemble(std::vector<FittedWorkingModel> models,
                                          const ObservedSample& sample) {
  if (models.empty()) {
    throw InvariantViolation("WorkingModelSet: at least one working model required");
  }
  WorkingModelSet set;
  set.predictions.resize(sample.n, static_cast<Eigen::Index>(models.size()));
  Eigen::Index total_cols = 0;
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (models[j].predictions.size() != sample.n ||
        models[j].calibration_columns.rows() != sample.n) {
      throw InvariantViolation("WorkingModelSet: model length mismatch");
    }
    set.predictions.col(static_cast<Eigen::Index>(j)) = models[j].predictions;
    total_cols += models[j].calibration_columns.cols();
  }
  set.calibration_matrix.resize(sample.n, total_cols);
  Eigen::Index at = 0;
  for (const auto& model : models) {
    const Eigen::Index k = model.calibration_columns.cols();
    set.calibration_matrix.middleCols(at, k) = model.calibration_columns;
    for (const auto& lbl : model.calibration_labels) {
      set.calibration_labels.push_back(lbl);
    }
    at += k;
  }

  // complete-case centered Gram of the calibration functions must be SPD
  const Eigen::Index q = total_cols;
  Vector mean = Vector::Zero(q);
  Eigen::Index nc = 0;
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    mean += set.calibration_matrix.row(i).transpose();
    ++nc;
  }
  if (nc <= q) {
    throw TooFewCompleteCases("WorkingModelSet: need more than q complete cases");
  }
  mean /= static_cast<double>(nc);
  Vector scale = Vector::Ones(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double sd = std::sqrt(
        (set.calibration_matrix.col(j).array() - mean[j]).square().sum() /
        static_cast<double>(sample.n));
    if (sd > 0.0) scale[j] = sd;
  }
  Matrix gram = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    const Vector d =
        ((set.calibration_matrix.row(i).transpose() - mean).array() / scale.array())
            .matrix();
    gram.noalias() += d * d.transpose();
  }
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient(
        "WorkingModelSet: calibration functions of the working models are collinear");
  }

  set.models = std::move(models);
  return set;
}

BestLinearPredictorFit fit_best_linear_predictor(const ObservedSample& sample,
                                                 const WorkingModelSet& working,
                                                 const PropensityFit& propensity,
                                                 BlpWeighting weighting) {
  const Matrix& u = working.calibration_matrix;
  const Eigen::Index q = u.cols();
  const Eigen::Index nc = sample.n_complete();
  if (nc < q + 1) {
    throw TooFewCompleteCases("fit_best_linear_predictor: need at least q+1 complete cases");
  }

  Matrix a = Matrix::Zero(q + 1, q + 1);
  Vector b = Vector::Zero(q + 1);
  Vector z(q + 1);
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    const double w =
        weighting == BlpWeighting::IpwWeighted ? 1.0 / propensity.pi[i] : 1.0;
    z[0] = 1.0;
    z.tail(q) = u.row(i).transpose();
    a.noalias() += w * z * z.transpose();
    b.noalias() += w * z * sample.y[i];
  }

  BestLinearPredictorFit fit;
  try {
    fit.c = solve_spd(a, b);
  } catch (const NotPositiveDefinite&) {
    throw RankDeficient("fit_best_linear_predictor: collinear working models");
  }
  fit.m_hat = Vector::Constant(sample.n, fit.c[0]);
  fit.m_hat.noalias() += u * fit.c.tail(q);
  return fit;
}

}  // namespace gelcal
