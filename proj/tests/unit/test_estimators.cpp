// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gelcal/engine.hpp"
#include "gelcal/rng.hpp"
#include "gelcal/simulation.hpp"

using namespace gelcal;

namespace {

PropensityFit manual_propensity(const Vector& pi) {
  PropensityFit fit;
  fit.beta = Vector::Zero(1);
  fit.pi = pi;
  fit.design = Matrix::Ones(pi.size(), 1);
  return fit;
}

CalibrationResult uniform_weights(const ObservedSample& s) {
  CalibrationResult result;
  result.weights = Vector::Zero(s.n);
  const double p = 1.0 / static_cast<double>(s.n_complete());
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (s.r[static_cast<std::size_t>(i)]) result.weights[i] = p;
  }
  result.weight_sum = 1.0;
  result.moment_residual = Vector::Zero(1);
  result.newton.converged = true;
  return result;
}

ObservedSample tiny_sample() {
  ObservedSample s;
  s.n = 2;
  s.y.resize(2);
  s.y << 2.0, std::numeric_limits<double>::quiet_NaN();
  s.r = {1, 0};
  s.x = Matrix::Zero(2, 1);
  s.column_names = {"z"};
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("estimators");

TEST_CASE("ipw hand arithmetic") {
  const ObservedSample s = tiny_sample();
  Vector pi(2);
  pi << 0.5, 0.5;
  const Estimate est = estimate_ipw(s, manual_propensity(pi));
  CHECK(est.value == doctest::Approx(2.0).epsilon(1e-15));  // (1/2)(2/0.5)
  const Estimate hajek = estimate_ipw(s, manual_propensity(pi), true);
  CHECK(hajek.value == doctest::Approx(2.0).epsilon(1e-15));  // single case
}

TEST_CASE("ipw with full observation and unit propensity is the sample mean") {
  const ScenarioReplicate rep = generate_kang_schafer({50, false, 2});
  const ObservedSample s = rep.full.as_observed();
  const Estimate est = estimate_ipw(s, manual_propensity(Vector::Ones(s.n)));
  CHECK(est.value == doctest::Approx(s.y.mean()).epsilon(1e-14));
}

TEST_CASE("aipw reduces to ipw when the augmentation vanishes") {
  const ScenarioReplicate rep = generate_kang_schafer({80, false, 3});
  const ObservedSample& s = rep.observed;
  const PropensityFit fit = fit_logistic_propensity(
      s, parse_formula("r ~ z1 + z2 + z3 + z4").terms);
  const Estimate ipw = estimate_ipw(s, fit);
  const Estimate aipw = estimate_aipw(s, fit, Vector::Zero(s.n));
  CHECK(aipw.value == doctest::Approx(ipw.value).epsilon(1e-14));
}

TEST_CASE("aipw with no missingness equals the mean regardless of the model") {
  const ScenarioReplicate rep = generate_kang_schafer({60, false, 4});
  const ObservedSample s = rep.full.as_observed();
  Vector junk(s.n);
  for (Eigen::Index i = 0; i < s.n; ++i) junk[i] = 1000.0 + i;
  const Estimate est = estimate_aipw(s, manual_propensity(Vector::Ones(s.n)), junk);
  CHECK(est.value == doctest::Approx(s.y.mean()).epsilon(1e-12));
}

TEST_CASE("ols estimate is the mean of the predictions") {
  const ObservedSample s = tiny_sample();
  const Estimate est = estimate_ols(s, Vector::Constant(2, 7.5));
  CHECK(est.value == 7.5);
}

TEST_CASE("calibration estimate with uniform weights is the complete-case mean") {
  const ScenarioReplicate rep = generate_kang_schafer({40, false, 5});
  const ObservedSample& s = rep.observed;
  const Estimate est = estimate_cal(s, uniform_weights(s));
  double mean = 0.0;
  Eigen::Index nc = 0;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (s.r[static_cast<std::size_t>(i)]) {
      mean += s.y[i];
      ++nc;
    }
  }
  mean /= static_cast<double>(nc);
  CHECK(est.value == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("quadratic calibration equals the generalized regression oracle") {
  const ScenarioReplicate rep = generate_kang_schafer({300, false, 6});
  const ObservedSample& s = rep.observed;
  const PropensityFit propensity = fit_logistic_propensity(
      s, parse_formula("r ~ z1 + z2 + z3 + z4").terms);
  const FittedWorkingModel m1 =
      fit_working_ols(s, parse_formula("y ~ z1 + z2 + z3 + z4").terms);
  const FittedWorkingModel m2 = fit_working_ols(s, parse_formula("y ~ sq(z1)").terms);
  const WorkingModelSet set = WorkingModelSet::assemble({m1, m2}, s);
  const CalibrationProblem problem = make_calibration_problem(
      s, set.calibration_matrix, propensity, RhoFunction::quadratic());
  const CalibrationResult cal = solve_lambda_quadratic_closed_form(problem);
  const Estimate est = estimate_cal(s, cal);

  // oracle: weighted least squares of y on (1,u), then the regression
  // estimator  sum w (y - c'u)/sum w + c' u_bar
  const Matrix& u_mat = set.calibration_matrix;
  const Eigen::Index q = u_mat.cols();
  Matrix a = Matrix::Zero(q + 1, q + 1);
  Vector b = Vector::Zero(q + 1);
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (!s.r[static_cast<std::size_t>(i)]) continue;
    Vector z(q + 1);
    z[0] = 1.0;
    z.tail(q) = u_mat.row(i).transpose();
    const double w = 1.0 / propensity.pi[i];
    a += w * z * z.transpose();
    b += w * z * s.y[i];
  }
  const Vector coef = solve_spd(a, b);
  double resid_sum = 0.0, w_sum = 0.0;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (!s.r[static_cast<std::size_t>(i)]) continue;
    const double w = 1.0 / propensity.pi[i];
    resid_sum += w * (s.y[i] - coef.tail(q).dot(u_mat.row(i).transpose()));
    w_sum += w;
  }
  const double oracle =
      resid_sum / w_sum + coef.tail(q).dot(problem.u_bar);
  CHECK(est.value == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("multipurpose estimates share one weight vector bitwise") {
  const ScenarioReplicate rep = generate_kang_schafer({200, false, 8});
  const ObservedSample& s = rep.observed;
  const CalibrationResult cal = uniform_weights(s);
  const std::vector<EstimandSpec> estimands = {EstimandSpec::mean(),
                                               EstimandSpec::tail_probability(210.0)};
  const std::vector<Estimate> ests = multipurpose_estimate(s, cal, estimands);
  REQUIRE(ests.size() == 2);

  double mean = 0.0, tail = 0.0;
  Eigen::Index nc = 0;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (!s.r[static_cast<std::size_t>(i)]) continue;
    mean += s.y[i];
    tail += s.y[i] > 210.0 ? 1.0 : 0.0;
    ++nc;
  }
  CHECK(ests[0].value == doctest::Approx(mean / nc).epsilon(1e-13));
  CHECK(ests[1].value == doctest::Approx(tail / nc).epsilon(1e-13));

  // recomputing each estimand from the same stored weights reproduces the
  // reported values bit for bit
  double replay_mean = 0.0, replay_tail = 0.0;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (!s.r[static_cast<std::size_t>(i)]) continue;
    replay_mean += cal.weights[i] * s.y[i];
    replay_tail += cal.weights[i] * (s.y[i] > 210.0 ? 1.0 : 0.0);
  }
  CHECK(ests[0].value == replay_mean);
  CHECK(ests[1].value == replay_tail);
}

TEST_CASE("functional grid: constant integrand is exactly one") {
  const ScenarioReplicate rep = generate_kang_schafer({150, false, 9});
  const ObservedSample& s = rep.observed;
  const CalibrationResult cal = uniform_weights(s);
  const Estimate est = functional_grid_approx(
      s, cal, [](double) { return 1.0; }, {180.0, 210.0, 240.0});
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("functional grid: two-point response at interval midpoints is exact") {
  ObservedSample s;
  s.n = 4;
  s.y.resize(4);
  s.y << 1.0, 1.0, 3.0, 3.0;
  s.r = {1, 1, 1, 1};
  s.x = Matrix::Zero(4, 1);
  s.column_names = {"z"};
  const CalibrationResult cal = uniform_weights(s);
  // y sits exactly at the midpoints of the two interior intervals (0,2]
  // and (2,4], so the discrete approximation reproduces the mean
  const Estimate est = functional_grid_approx(
      s, cal, [](double y) { return y; }, {0.0, 2.0, 4.0});
  CHECK(est.value == doctest::Approx(s.y.mean()).epsilon(1e-14));
}

TEST_CASE("functional grid at 64 quantile cutpoints tracks the weighted mean") {
  const ScenarioReplicate rep = generate_kang_schafer({2000, false, 10});
  const ObservedSample& s = rep.observed;
  const PropensityFit propensity = fit_logistic_propensity(
      s, parse_formula("r ~ z1 + z2 + z3 + z4").terms);
  const FittedWorkingModel m1 =
      fit_working_ols(s, parse_formula("y ~ z1 + z2 + z3 + z4").terms);
  const WorkingModelSet set = WorkingModelSet::assemble({m1}, s);
  const CalibrationProblem problem = make_calibration_problem(
      s, set.calibration_matrix, propensity, RhoFunction::quadratic());
  const CalibrationResult cal = solve_lambda(problem);
  const Estimate direct = estimate_cal(s, cal);

  std::vector<double> observed;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (s.r[static_cast<std::size_t>(i)]) observed.push_back(s.y[i]);
  }
  std::sort(observed.begin(), observed.end());
  std::vector<double> cuts;
  for (int k = 1; k <= 64; ++k) {
    const std::size_t idx = k * (observed.size() - 1) / 65;
    const double c = observed[idx];
    if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
  }
  const Estimate grid =
      functional_grid_approx(s, cal, [](double y) { return y; }, cuts);
  CHECK(std::abs(grid.value - direct.value) <= 0.02 * std::abs(direct.value));
}

TEST_CASE("functional grid flags empty intervals") {
  ObservedSample s;
  s.n = 3;
  s.y.resize(3);
  s.y << 1.0, 1.1, 0.9;
  s.r = {1, 1, 1};
  s.x = Matrix::Zero(3, 1);
  s.column_names = {"z"};
  const Estimate est = functional_grid_approx(
      s, uniform_weights(s), [](double y) { return y; }, {5.0, 6.0});
  CHECK(est.notes.size() == 2);  // (5,6] and (6,inf) carry no mass
}

TEST_CASE("estimating equation: mean and exceedance as Z-estimators") {
  const ScenarioReplicate rep = generate_kang_schafer({120, false, 11});
  const ObservedSample& s = rep.observed;
  const CalibrationResult cal = uniform_weights(s);
  const Estimate direct = estimate_cal(s, cal);

  EstimatingFunction mean_g;
  mean_g.dim = 1;
  mean_g.g = [](double y, const Vector&, const Vector& theta) {
    Vector out(1);
    out[0] = y - theta[0];
    return out;
  };
  mean_g.jacobian = [](double, const Vector&, const Vector&) {
    Matrix j(1, 1);
    j(0, 0) = -1.0;
    return j;
  };
  const auto mean_est = solve_estimating_equation(s, cal, mean_g, Vector::Zero(1));
  CHECK(mean_est[0].value == doctest::Approx(direct.value).epsilon(1e-10));

  EstimatingFunction tail_g;
  tail_g.dim = 1;
  tail_g.g = [](double y, const Vector&, const Vector& theta) {
    Vector out(1);
    out[0] = (y > 210.0 ? 1.0 : 0.0) - theta[0];
    return out;
  };
  tail_g.jacobian = mean_g.jacobian;
  const auto tail_est =
      solve_estimating_equation(s, cal, tail_g, Vector::Constant(1, 0.5));
  const std::vector<Estimate> mp = multipurpose_estimate(
      s, cal, {EstimandSpec::tail_probability(210.0)});
  CHECK(tail_est[0].value == doctest::Approx(mp[0].value).epsilon(1e-10));
}

TEST_CASE("estimating equation: weighted variance pair") {
  const ScenarioReplicate rep = generate_kang_schafer({150, false, 12});
  const ObservedSample& s = rep.observed;
  const CalibrationResult cal = uniform_weights(s);

  EstimatingFunction g;
  g.dim = 2;
  g.g = [](double y, const Vector&, const Vector& theta) {
    Vector out(2);
    out[0] = y - theta[0];
    out[1] = (y - theta[0]) * (y - theta[0]) - theta[1];
    return out;
  };
  g.jacobian = [](double y, const Vector&, const Vector& theta) {
    Matrix j(2, 2);
    j(0, 0) = -1.0;
    j(0, 1) = 0.0;
    j(1, 0) = -2.0 * (y - theta[0]);
    j(1, 1) = -1.0;
    return j;
  };
  Vector start(2);
  start << 200.0, 100.0;
  const auto est = solve_estimating_equation(s, cal, g, start);

  double mean = 0.0;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (s.r[static_cast<std::size_t>(i)]) mean += cal.weights[i] * s.y[i];
  }
  double var = 0.0;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (s.r[static_cast<std::size_t>(i)]) {
      var += cal.weights[i] * (s.y[i] - mean) * (s.y[i] - mean);
    }
  }
  CHECK(est[0].value == doctest::Approx(mean).epsilon(1e-9));
  CHECK(est[1].value == doctest::Approx(var).epsilon(1e-8));
}

TEST_CASE("estimating equation rejects a singular Jacobian") {
  const ObservedSample s = tiny_sample();
  const CalibrationResult cal = uniform_weights(s);
  EstimatingFunction g;
  g.dim = 1;
  g.g = [](double, const Vector&, const Vector&) { return Vector::Ones(1); };
  g.jacobian = [](double, const Vector&, const Vector&) {
    return Matrix::Zero(1, 1);
  };
  CHECK_THROWS_AS(solve_estimating_equation(s, cal, g, Vector::Zero(1)),
                  SingularJacobian);
}

TEST_CASE("appending the constant working model leaves the estimate unchanged") {
  const ScenarioReplicate rep = generate_kang_schafer({250, false, 13});
  const ObservedSample& s = rep.observed;
  const PropensityFit propensity = fit_logistic_propensity(
      s, parse_formula("r ~ z1 + z2 + z3 + z4").terms);
  const FittedWorkingModel m1 =
      fit_working_ols(s, parse_formula("y ~ z1 + z2 + z3 + z4").terms);
  const WorkingModelSet set = WorkingModelSet::assemble({m1}, s);

  const CalibrationProblem base = make_calibration_problem(
      s, set.calibration_matrix, propensity, RhoFunction::empirical_likelihood());
  const Estimate est1 = estimate_cal(s, solve_lambda(base, std::nullopt));

  Matrix with_const(s.n, set.calibration_matrix.cols() + 1);
  with_const.leftCols(set.calibration_matrix.cols()) = set.calibration_matrix;
  with_const.rightCols(1).setOnes();
  const CalibrationProblem extended = make_calibration_problem(
      s, with_const, propensity, RhoFunction::empirical_likelihood());
  const Estimate est2 = estimate_cal(s, solve_lambda(extended, std::nullopt));
  CHECK(std::abs(est1.value - est2.value) <= 1e-10);
}

TEST_CASE("affine equivariance of cal, aipw, ols and hajek") {
  const ScenarioReplicate rep = generate_kang_schafer({300, false, 14});
  const ObservedSample& s = rep.observed;
  const double a = -2.5, b = 17.0;
  ObservedSample shifted = s;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (s.r[static_cast<std::size_t>(i)]) shifted.y[i] = a * s.y[i] + b;
  }

  const PropensityFit propensity = fit_logistic_propensity(
      s, parse_formula("r ~ z1 + z2 + z3 + z4").terms);
  const auto terms = parse_formula("y ~ z1 + z2 + z3 + z4").terms;

  // cal: weights depend only on (x, r), so they are identical
  const FittedWorkingModel m = fit_working_ols(s, terms);
  const WorkingModelSet set = WorkingModelSet::assemble({m}, s);
  const CalibrationProblem problem = make_calibration_problem(
      s, set.calibration_matrix, propensity, RhoFunction::exponential_tilting());
  const CalibrationResult cal = solve_lambda(problem);
  const double cal_y = estimate_cal(s, cal).value;
  const double cal_shifted = estimate_cal(shifted, cal).value;
  CHECK(cal_shifted ==
        doctest::Approx(a * cal_y + b).epsilon(1e-12));

  // aipw with the refitted working model
  const FittedWorkingModel m_shift = fit_working_ols(shifted, terms);
  const double aipw_y = estimate_aipw(s, propensity, m.predictions).value;
  const double aipw_shift =
      estimate_aipw(shifted, propensity, m_shift.predictions).value;
  CHECK(aipw_shift == doctest::Approx(a * aipw_y + b).epsilon(1e-12));

  const double ols_y = estimate_ols(s, m.predictions).value;
  const double ols_shift = estimate_ols(shifted, m_shift.predictions).value;
  CHECK(ols_shift == doctest::Approx(a * ols_y + b).epsilon(1e-12));

  const double hajek_y = estimate_ipw(s, propensity, true).value;
  const double hajek_shift = estimate_ipw(shifted, propensity, true).value;
  CHECK(hajek_shift == doctest::Approx(a * hajek_y + b).epsilon(1e-12));
}

TEST_CASE("aipw and quadratic calibration approach each other at large n") {
  const ScenarioReplicate rep = generate_kang_schafer({100000, false, 15});
  const ObservedSample& s = rep.observed;
  const PropensityFit propensity = fit_logistic_propensity(
      s, parse_formula("r ~ z1 + z2 + z3 + z4").terms);
  const FittedWorkingModel m =
      fit_working_ols(s, parse_formula("y ~ z1 + z2 + z3 + z4").terms);
  const WorkingModelSet set = WorkingModelSet::assemble({m}, s);
  const CalibrationProblem problem = make_calibration_problem(
      s, set.calibration_matrix, propensity, RhoFunction::quadratic());
  const double cal = estimate_cal(s, solve_lambda(problem)).value;
  const double aipw = estimate_aipw(s, propensity, m.predictions).value;
  CHECK(std::abs(cal - aipw) <= 0.005 * 210.0);
}

TEST_SUITE_END();
