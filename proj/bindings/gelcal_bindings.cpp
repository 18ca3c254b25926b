// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gelcal/config.hpp"
#include "gelcal/studies.hpp"
#include "gelcal/table.hpp"

namespace py = pybind11;
using namespace gelcal;

namespace {

ObservedSample make_sample(const Vector& y, const Matrix& x,
                           const std::optional<std::vector<int>>& r,
                           std::vector<std::string> columns) {
  ObservedSample s;
  s.n = x.rows();
  s.x = x;
  s.y = y;
  if (r) {
    s.r.assign(r->size(), 0);
    for (std::size_t i = 0; i < r->size(); ++i) {
      s.r[i] = static_cast<std::uint8_t>((*r)[i] != 0);
    }
  } else {
    s.r.resize(static_cast<std::size_t>(s.n));
    for (Eigen::Index i = 0; i < s.n; ++i) {
      s.r[static_cast<std::size_t>(i)] = std::isfinite(y[i]) ? 1 : 0;
    }
  }
  if (columns.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      columns.push_back("x" + std::to_string(j + 1));
    }
  }
  s.column_names = std::move(columns);
  s.validate();
  return s;
}

EstimandSpec estimand_from_py(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) {
    const std::string text = obj.cast<std::string>();
    if (text == "mean") return EstimandSpec::mean();
    if (text.rfind("tail:", 0) == 0) {
      return EstimandSpec::tail_probability(std::stod(text.substr(5)));
    }
    throw ConfigError("unknown estimand '" + text + "' (mean or tail:<c>)");
  }
  if (py::isinstance<py::tuple>(obj) || py::isinstance<py::list>(obj)) {
    const auto seq = obj.cast<std::vector<py::object>>();
    const std::string kind = seq.at(0).cast<std::string>();
    if (kind == "mean") return EstimandSpec::mean();
    if (kind == "tail") return EstimandSpec::tail_probability(seq.at(1).cast<double>());
    if (kind == "grid") {
      auto h = seq.at(1).cast<std::function<double(double)>>();
      auto cuts = seq.at(2).cast<std::vector<double>>();
      return EstimandSpec::functional_grid(std::move(h), std::move(cuts));
    }
  }
  throw ConfigError("estimand must be 'mean', 'tail:<c>', ('tail', c) or ('grid', h, cuts)");
}

py::dict estimate_to_dict(const Estimate& est, const std::string& estimand) {
  py::dict d;
  d["method"] = est.method;
  d["estimand"] = estimand;
  d["value"] = est.value;
  d["se"] = est.se ? py::cast(*est.se) : py::none();
  d["ci_lo"] = est.ci_lo ? py::cast(*est.ci_lo) : py::none();
  d["ci_hi"] = est.ci_hi ? py::cast(*est.ci_hi) : py::none();
  d["n_complete"] = static_cast<long>(est.n_complete);
  d["notes"] = est.notes;
  return d;
}

py::list run_estimators(const ObservedSample& sample, const std::vector<std::string>& kinds,
                        const std::string& propensity, const std::vector<std::string>& working,
                        const std::string& rho, bool box, bool se,
                        const std::vector<py::object>& estimand_objs) {
  RunConfig config;
  config.estimators = kinds;
  config.propensity = propensity;
  config.working = working;
  config.rho = rho;
  config.box = box;
  config.se = se;
  const auto grid = build_estimator_grid(config);

  std::vector<EstimandSpec> estimands;
  if (estimand_objs.empty()) {
    estimands.push_back(EstimandSpec::mean());
  } else {
    for (const auto& e : estimand_objs) estimands.push_back(estimand_from_py(e));
  }

  py::list out;
  for (const auto& spec : grid) {
    const EvaluationOutput result = evaluate_estimator(sample, spec, estimands);
    for (std::size_t e = 0; e < estimands.size(); ++e) {
      out.append(estimate_to_dict(result.estimates[e], estimands[e].label()));
    }
  }
  return out;
}

py::dict mc_row_to_dict(const McRow& row) {
  py::dict d;
  d["estimator"] = row.estimator;
  d["estimand"] = row.estimand;
  d["bias"] = row.bias;
  d["sse"] = row.sse;
  d["rmse"] = row.rmse;
  d["re_rmse_vs_ols"] = row.re_rmse_vs_ols ? py::cast(*row.re_rmse_vs_ols) : py::none();
  d["re_mse_vs_ipw"] = row.re_mse_vs_ipw ? py::cast(*row.re_mse_vs_ipw) : py::none();
  d["see"] = row.see ? py::cast(*row.see) : py::none();
  d["coverage"] = row.coverage ? py::cast(*row.coverage) : py::none();
  d["n_reps"] = row.n_reps;
  d["failed_reps"] = row.failed_reps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gelcal, m) {
  m.doc() = "Generalized empirical likelihood calibration estimation for "
            "missing-response data";

  py::register_exception<Error>(m, "GelcalError");

  py::class_<RhoFunction>(m, "RhoFunction")
      .def_static("quadratic", &RhoFunction::quadratic)
      .def_static("empirical_likelihood", &RhoFunction::empirical_likelihood)
      .def_static("exponential_tilting", &RhoFunction::exponential_tilting)
      .def_static("power_divergence", &RhoFunction::power_divergence, py::arg("theta"))
      .def("eval", &RhoFunction::eval, py::arg("v"), py::arg("order"))
      .def("name", &RhoFunction::name);
  m.def("parse_rho", &parse_rho, py::arg("name"));

  py::class_<ObservedSample>(m, "Sample")
      .def_property_readonly("n", [](const ObservedSample& s) { return s.n; })
      .def_property_readonly("n_complete", &ObservedSample::n_complete)
      .def_property_readonly("y", [](const ObservedSample& s) { return s.y; })
      .def_property_readonly("x", [](const ObservedSample& s) { return s.x; })
      .def_property_readonly("r",
                             [](const ObservedSample& s) {
                               std::vector<int> r(s.r.begin(), s.r.end());
                               return r;
                             })
      .def_property_readonly("columns",
                             [](const ObservedSample& s) { return s.column_names; });

  m.def("make_sample", &make_sample, py::arg("y"), py::arg("x"),
        py::arg("r") = std::nullopt,
        py::arg("columns") = std::vector<std::string>{},
        "Sample from a response vector (NaN = missing), covariate matrix, "
        "optional 0/1 nonmissing indicators and column names");

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& missing_token) {
        CsvOptions opts;
        opts.missing_token = missing_token;
        return load_csv(path, opts);
      },
      py::arg("path"), py::arg("missing_token") = "NA");

  m.def(
      "check_formula",
      [](const std::string& text) { return parse_formula(text).text(); },
      py::arg("text"), "Parse a model formula and return its canonical form");

  m.def(
      "fit_propensity",
      [](const ObservedSample& sample, const std::string& formula) {
        const FormulaSpec spec = parse_formula(formula);
        if (spec.response != "r") throw ConfigError("propensity response must be 'r'");
        const PropensityFit fit = fit_logistic_propensity(sample, spec.terms);
        py::dict d;
        d["beta"] = fit.beta;
        d["pi"] = fit.pi;
        d["score_norm"] = fit.score_norm;
        d["columns"] = fit.design_columns;
        return d;
      },
      py::arg("sample"), py::arg("formula"),
      "Logistic missingness model; returns beta, fitted pi and diagnostics");

  m.def(
      "calibration_weights",
      [](const ObservedSample& sample, const std::string& propensity,
         const std::vector<std::string>& working, const std::string& rho, bool box) {
        EstimatorSpec spec;
        spec.kind = EstimatorSpec::Kind::Cal;
        spec.rho = rho;
        spec.use_box = box;
        spec.propensity = parse_formula(propensity);
        for (const auto& w : working) spec.working.push_back(parse_formula(w));

        const PropensityFit prop =
            sample.n_complete() == sample.n
                ? PropensityFit{Vector::Zero(0), Vector::Ones(sample.n), 0.0, {},
                                Matrix::Zero(sample.n, 0)}
                : fit_logistic_propensity(sample, spec.propensity->terms);
        std::vector<FittedWorkingModel> models;
        for (const auto& f : spec.working) {
          if (f.response_cmp) {
            models.push_back(fit_working_logistic(sample, f.terms, *f.response_cmp,
                                                  f.response_threshold));
          } else {
            models.push_back(fit_working_ols(sample, f.terms));
          }
        }
        const WorkingModelSet set = WorkingModelSet::assemble(std::move(models), sample);
        const CalibrationProblem problem = make_calibration_problem(
            sample, set.calibration_matrix, prop, parse_rho(rho));
        std::optional<FeasibilityBox> fb;
        if (box) fb = FeasibilityBox{};
        const CalibrationResult result = solve_lambda(problem, fb);
        const WeightDiagnostics diag = weight_diagnostics(result, sample.r);

        py::dict d;
        d["weights"] = result.weights;
        d["lambda"] = result.lambda_hat;
        d["moment_residual"] = result.moment_residual;
        d["effective_sample_size"] = diag.effective_sample_size;
        d["min_weight"] = diag.min_weight;
        d["max_weight"] = diag.max_weight;
        d["negative_count"] = static_cast<long>(diag.negative_count);
        return d;
      },
      py::arg("sample"), py::arg("propensity"), py::arg("working"),
      py::arg("rho") = "quadratic", py::arg("box") = true,
      "GEL calibration weights with diagnostics");

  m.def("estimate", &run_estimators, py::arg("sample"), py::arg("estimators"),
        py::arg("propensity") = "", py::arg("working") = std::vector<std::string>{},
        py::arg("rho") = "quadratic", py::arg("box") = true, py::arg("se") = true,
        py::arg("estimands") = std::vector<py::object>{},
        "Evaluate point estimators (ipw, ipw_hajek, aipw, ols, cal, cal2) on a sample");

  m.def(
      "generate_kang_schafer",
      [](long n, bool interaction, std::uint64_t seed) {
        const ScenarioReplicate rep =
            generate_kang_schafer({static_cast<Eigen::Index>(n), interaction, seed});
        py::dict d;
        d["y_full"] = rep.full.y;
        d["x"] = rep.full.x;
        d["columns"] = rep.full.column_names;
        std::vector<int> r(rep.observed.r.begin(), rep.observed.r.end());
        d["r"] = r;
        d["observed"] = rep.observed;
        return d;
      },
      py::arg("n"), py::arg("interaction") = false, py::arg("seed") = 0,
      "One replicate of the Kang-Schafer scenario");

  m.def(
      "run_table",
      [](int table, long n, int reps, std::uint64_t seed, int parallelism) {
        McStudyConfig config;
        config.scenario.n = static_cast<Eigen::Index>(n);
        config.n_reps = reps;
        config.base_seed = seed;
        config.parallelism = parallelism;
        py::list out;
        auto append_rows = [&](const McTable& t) {
          for (const auto& row : t.rows) out.append(mc_row_to_dict(row));
        };
        switch (table) {
          case 1:
          case 2:
            config.scenario.interaction = (table == 2);
            append_rows(run_mc_study(config, ks_comparison_grid(false)));
            append_rows(run_mc_study(config, ks_comparison_grid(true)));
            break;
          case 3:
            append_rows(run_mc_study(config, ks_coverage_grid(false)));
            append_rows(run_mc_study(config, ks_coverage_grid(true)));
            break;
          case 4:
            append_rows(run_nested_models_study(config.scenario.n, reps, seed, parallelism));
            break;
          case 5:
            config.estimands = {EstimandSpec::mean(), EstimandSpec::tail_probability(240.0)};
            append_rows(run_mc_study(config, ks_multipurpose_grid(false)));
            append_rows(run_mc_study(config, ks_multipurpose_grid(true)));
            break;
          default:
            throw ConfigError("table must be 1..5");
        }
        return out;
      },
      py::arg("table"), py::arg("n") = 1000, py::arg("reps") = 1000,
      py::arg("seed") = 20260101, py::arg("parallelism") = 1,
      "Monte Carlo comparison tables for the Kang-Schafer scenario");

  m.def(
      "solve_estimating_equation",
      [](const ObservedSample& sample, const std::string& propensity,
         const std::vector<std::string>& working, const std::string& rho, bool box,
         std::function<Vector(double, const Vector&, const Vector&)> g,
         std::function<Matrix(double, const Vector&, const Vector&)> jacobian,
         const Vector& theta0) {
        EstimatorSpec spec;
        spec.kind = EstimatorSpec::Kind::Cal;
        spec.rho = rho;
        spec.use_box = box;
        spec.propensity = parse_formula(propensity);
        for (const auto& w : working) spec.working.push_back(parse_formula(w));
        const PropensityFit prop =
            sample.n_complete() == sample.n
                ? PropensityFit{Vector::Zero(0), Vector::Ones(sample.n), 0.0, {},
                                Matrix::Zero(sample.n, 0)}
                : fit_logistic_propensity(sample, spec.propensity->terms);
        std::vector<FittedWorkingModel> models;
        for (const auto& f : spec.working) {
          if (f.response_cmp) {
            models.push_back(fit_working_logistic(sample, f.terms, *f.response_cmp,
                                                  f.response_threshold));
          } else {
            models.push_back(fit_working_ols(sample, f.terms));
          }
        }
        const WorkingModelSet set = WorkingModelSet::assemble(std::move(models), sample);
        const CalibrationProblem problem = make_calibration_problem(
            sample, set.calibration_matrix, prop, parse_rho(rho));
        std::optional<FeasibilityBox> fb;
        if (box) fb = FeasibilityBox{};
        const CalibrationResult cal = solve_lambda(problem, fb);

        EstimatingFunction fn;
        fn.g = std::move(g);
        fn.jacobian = std::move(jacobian);
        fn.dim = theta0.size();
        const auto ests = solve_estimating_equation(sample, cal, fn, theta0);
        Vector theta(ests.size());
        for (std::size_t j = 0; j < ests.size(); ++j) theta[(Eigen::Index)j] = ests[j].value;
        return theta;
      },
      py::arg("sample"), py::arg("propensity"), py::arg("working"),
      py::arg("rho"), py::arg("box"), py::arg("g"), py::arg("jacobian"),
      py::arg("theta0"),
      "Root of the calibration-weighted estimating equation sum r_i p_i g = 0");

  m.def("normal_quantile", &normal_quantile, py::arg("p"));
  m.def(
      "wald_ci",
      [](double value, double se, double level) { return wald_ci(value, se, level); },
      py::arg("value"), py::arg("se"), py::arg("level") = 0.95);

  m.attr("__version__") = GELCAL_VERSION;
}
