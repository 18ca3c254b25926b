// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/engine.hpp"

#include <cmath>

namespace gelcal {

namespace {

PropensityFit trivial_propensity(const ObservedSample& sample) {
  PropensityFit fit;
  fit.beta = Vector::Zero(0);
  fit.pi = Vector::Ones(sample.n);
  fit.score_norm = 0.0;
  fit.design = Matrix::Zero(sample.n, 0);
  return fit;
}

PropensityFit fit_propensity(const ObservedSample& sample, const EstimatorSpec& spec) {
  if (sample.n_complete() == sample.n) {
    // nothing is missing; weighting is the identity
    return trivial_propensity(sample);
  }
  if (!spec.propensity) {
    throw ConfigError("estimator '" + spec.display_label() +
                      "' needs a propensity formula on a sample with missing responses");
  }
  if (spec.propensity->response != "r" || spec.propensity->response_cmp) {
    throw ConfigError("propensity formula response must be 'r'");
  }
  return fit_logistic_propensity(sample, spec.propensity->terms);
}

FittedWorkingModel fit_working(const ObservedSample& sample, const FormulaSpec& formula) {
  FittedWorkingModel model;
  if (formula.response_cmp) {
    if (formula.response != "y") {
      throw ConfigError("working model indicator response must be on 'y'");
    }
    model = fit_working_logistic(sample, formula.terms, *formula.response_cmp,
                                 formula.response_threshold);
  } else {
    if (formula.response != "y") {
      throw ConfigError("working model response must be 'y' or I(y cmp c)");
    }
    model = fit_working_ols(sample, formula.terms);
  }
  model.label = formula.text();
  return model;
}

// sample with h applied to the observed responses
ObservedSample transformed(const ObservedSample& sample, const EstimandSpec& estimand) {
  ObservedSample t = sample;
  for (Eigen::Index i = 0; i < t.n; ++i) {
    if (t.r[i]) t.y[i] = estimand.apply(sample.y[i]);
  }
  return t;
}

void attach_plugin_se(Estimate& est, const ObservedSample& h_sample,
                      const PropensityFit& propensity, const WorkingModelSet& working,
                      double ci_level) {
  if (propensity.beta.size() == 0) {
    est.notes.push_back("no plug-in SE: sample has no missing responses");
    return;
  }
  const BestLinearPredictorFit blp =
      fit_best_linear_predictor(h_sample, working, propensity);
  const VariancePlugin plugin =
      plugin_variance(h_sample, propensity, blp, est.value);
  est.se = plugin.se;
  const auto ci = wald_ci(est.value, plugin.se, ci_level);
  est.ci_lo = ci.first;
  est.ci_hi = ci.second;
  for (const auto& w : plugin.warnings) est.notes.push_back(w);
}

}  // namespace

std::string EstimatorSpec::display_label() const {
  if (!label.empty()) return label;
  switch (kind) {
    case Kind::Ipw: return "ipw";
    case Kind::IpwHajek: return "ipw_hajek";
    case Kind::Aipw: return "aipw";
    case Kind::Ols: return "ols";
    case Kind::Cal: return "cal[" + rho + "]";
    case Kind::Cal2: return "cal2[" + rho + "]";
    case Kind::Oracle: return "oracle";
  }
  return "?";
}

EvaluationOutput evaluate_estimator(const ObservedSample& sample,
                                    const EstimatorSpec& spec,
                                    const std::vector<EstimandSpec>& estimands) {
  if (estimands.empty()) {
    throw ConfigError("at least one estimand is required");
  }
  EvaluationOutput out;
  const std::string label = spec.display_label();

  if (spec.kind == EstimatorSpec::Kind::Oracle) {
    if (spec.oracle_values.size() != estimands.size()) {
      throw ConfigError("oracle estimator needs one value per estimand");
    }
    for (std::size_t e = 0; e < estimands.size(); ++e) {
      Estimate est;
      est.method = label;
      est.value = spec.oracle_values[e];
      est.n_complete = sample.n_complete();
      out.estimates.push_back(std::move(est));
    }
    return out;
  }

  if (spec.kind == EstimatorSpec::Kind::Ols) {
    if (spec.working.empty()) {
      throw ConfigError("ols estimator needs a working model formula");
    }
    const FittedWorkingModel model = fit_working(sample, spec.working.front());
    for (const auto& estimand : estimands) {
      if (estimand.kind != EstimandSpec::Kind::Mean) {
        throw ConfigError("ols supports only the mean estimand");
      }
      Estimate est = estimate_ols(sample, model.predictions);
      est.method = label;
      out.estimates.push_back(std::move(est));
    }
    return out;
  }

  const PropensityFit propensity = fit_propensity(sample, spec);

  switch (spec.kind) {
    case EstimatorSpec::Kind::Ipw:
    case EstimatorSpec::Kind::IpwHajek: {
      const bool hajek = spec.kind == EstimatorSpec::Kind::IpwHajek;
      for (const auto& estimand : estimands) {
        Estimate est = estimate_ipw(transformed(sample, estimand), propensity, hajek);
        est.method = label;
        out.estimates.push_back(std::move(est));
      }
      return out;
    }
    case EstimatorSpec::Kind::Aipw: {
      if (spec.working.empty()) {
        throw ConfigError("aipw estimator needs a working model formula");
      }
      const FittedWorkingModel model = fit_working(sample, spec.working.front());
      for (const auto& estimand : estimands) {
        if (estimand.kind != EstimandSpec::Kind::Mean) {
          throw ConfigError("aipw supports only the mean estimand");
        }
        Estimate est = estimate_aipw(sample, propensity, model.predictions);
        est.method = label;
        out.estimates.push_back(std::move(est));
      }
      return out;
    }
    case EstimatorSpec::Kind::Cal:
    case EstimatorSpec::Kind::Cal2: {
      if (spec.working.empty()) {
        throw ConfigError("calibration estimators need at least one working model");
      }
      std::vector<FittedWorkingModel> models;
      models.reserve(spec.working.size());
      for (const auto& f : spec.working) models.push_back(fit_working(sample, f));
      const WorkingModelSet working =
          WorkingModelSet::assemble(std::move(models), sample);

      const RhoFunction rho = parse_rho(spec.rho);
      const Matrix& u_cols = working.calibration_matrix;
      CalibrationResult cal;
      if (spec.kind == EstimatorSpec::Kind::Cal) {
        const CalibrationProblem problem =
            make_calibration_problem(sample, u_cols, propensity, rho);
        std::optional<FeasibilityBox> box;
        if (spec.use_box) box = FeasibilityBox{};
        cal = solve_lambda(problem, box);
        out.box_active = spec.use_box;
      } else {
        // centered variant calibrates to (1, u) so the constant moment pins
        // the weight sum
        Matrix u(sample.n, u_cols.cols() + 1);
        u.col(0).setOnes();
        u.rightCols(u_cols.cols()) = u_cols;
        const CalibrationProblem problem =
            make_calibration_problem(sample, u, propensity, rho);
        cal = solve_centered(problem);
      }
      out.weight_diag = weight_diagnostics(cal, sample.r);

      for (const auto& estimand : estimands) {
        Estimate est;
        if (estimand.kind == EstimandSpec::Kind::FunctionalGrid) {
          est = functional_grid_approx(sample, cal, estimand.h, estimand.cutpoints);
        } else {
          const ObservedSample h_sample = transformed(sample, estimand);
          est = estimate_cal(h_sample, cal);
          if (spec.attach_se && spec.kind == EstimatorSpec::Kind::Cal) {
            attach_plugin_se(est, h_sample, propensity, working, spec.ci_level);
          }
        }
        est.method = label;
        for (const auto& w : cal.warnings) est.notes.push_back(w);
        out.estimates.push_back(std::move(est));
      }
      return out;
    }
    default:
      throw ConfigError("unhandled estimator kind");
  }
}

}  // namespace gelcal
