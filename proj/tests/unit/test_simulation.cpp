// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "gelcal/rng.hpp"
#include "gelcal/studies.hpp"
#include "gelcal/table.hpp"

using namespace gelcal;

namespace {

FullSample synthetic_skewed_full(Eigen::Index n, std::uint64_t seed) {
  // skewed outcome linear in two covariates, mimicking expenditure data
  RngStream rng(seed);
  FullSample full;
  full.y.resize(n);
  full.x.resize(n, 2);
  full.column_names = {"x1", "x2"};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = 1.0 + static_cast<double>(rng.next_u64() % 5);  // family size
    const double x2 = std::floor(8.0 * std::exp(0.7 * rng.next_normal()));
    full.x(i, 0) = x1;
    full.x(i, 1) = x2;
    full.y[i] = 200.0 * x1 + 150.0 * x2 + 40.0 * rng.next_normal();
  }
  return full;
}

EstimatorSpec ipw_spec(const std::string& propensity) {
  EstimatorSpec spec;
  spec.kind = EstimatorSpec::Kind::Ipw;
  spec.label = "ipw";
  spec.propensity = parse_formula(propensity);
  return spec;
}

EstimatorSpec cal_spec(const std::string& propensity, const std::string& working,
                       const std::string& label) {
  EstimatorSpec spec;
  spec.kind = EstimatorSpec::Kind::Cal;
  spec.label = label;
  spec.rho = "quadratic";
  spec.propensity = parse_formula(propensity);
  spec.working = {parse_formula(working)};
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("simulation");

TEST_CASE("covariate transforms at z = 0") {
  const Eigen::Vector4d x = kang_schafer_transform(Eigen::Vector4d::Zero());
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(x[2] == doctest::Approx(0.216).epsilon(1e-12));  // 0.6^3
  CHECK(x[3] == doctest::Approx(400.0).epsilon(1e-15));
  CHECK(kang_schafer_missingness_logit(Eigen::Vector4d::Zero()) == 0.0);
}

TEST_CASE("large-sample moments of the generator") {
  const ScenarioReplicate rep = generate_kang_schafer({1000000, false, 424242});
  CHECK(std::abs(rep.full.y.mean() - 210.0) <= 0.1);
  double r_rate = 0.0;
  for (auto ri : rep.observed.r) r_rate += ri;
  r_rate /= static_cast<double>(rep.observed.n);
  CHECK(std::abs(r_rate - 0.5) <= 0.002);
  // analytic tail probability against the sample fraction
  const double p_true =
      kang_schafer_truth(EstimandSpec::tail_probability(240.0), false);
  double frac = 0.0;
  for (Eigen::Index i = 0; i < rep.full.y.size(); ++i) {
    frac += rep.full.y[i] > 240.0 ? 1.0 : 0.0;
  }
  frac /= static_cast<double>(rep.full.y.size());
  CHECK(std::abs(frac - p_true) <= 0.002);
}

TEST_CASE("same seed reproduces the replicate bit for bit") {
  const ScenarioReplicate a = generate_kang_schafer({500, true, 99});
  const ScenarioReplicate b = generate_kang_schafer({500, true, 99});
  CHECK(a.full.y == b.full.y);
  CHECK(a.full.x == b.full.x);
  CHECK(a.observed.r == b.observed.r);
  const ScenarioReplicate c = generate_kang_schafer({500, true, 100});
  CHECK(a.full.y != c.full.y);
}

TEST_CASE("interaction flag changes the outcome only") {
  const ScenarioReplicate plain = generate_kang_schafer({100, false, 7});
  const ScenarioReplicate inter = generate_kang_schafer({100, true, 7});
  CHECK(plain.full.x == inter.full.x);
  CHECK(plain.observed.r == inter.observed.r);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const double z1 = plain.full.x(i, 0), z2 = plain.full.x(i, 1);
    CHECK(inter.full.y[i] - plain.full.y[i] ==
          doctest::Approx(20.0 * z1 * z2).epsilon(1e-10));
  }
}

TEST_CASE("oracle estimator has zero bias and no coverage column") {
  McStudyConfig config;
  config.scenario.n = 60;
  config.n_reps = 25;
  config.base_seed = 5;
  EstimatorSpec oracle;
  oracle.kind = EstimatorSpec::Kind::Oracle;
  oracle.label = "oracle";
  oracle.oracle_values = {210.0};
  const McTable table = run_mc_study(config, {oracle});
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].bias == 0.0);
  CHECK(table.rows[0].sse == 0.0);
  CHECK_FALSE(table.rows[0].coverage.has_value());
  CHECK(table.rows[0].failed_reps == 0);
}

TEST_CASE("metric identity: rmse^2 = bias^2 + sse^2 (n-1)/n") {
  McStudyConfig config;
  config.scenario.n = 150;
  config.n_reps = 40;
  config.base_seed = 11;
  const McTable table =
      run_mc_study(config, {cal_spec("r ~ z1 + z2 + z3 + z4",
                                     "y ~ z1 + z2 + z3 + z4", "cal")});
  const McRow& row = table.rows[0];
  REQUIRE(row.n_reps == 40);
  const double replay = row.bias * row.bias +
                        row.sse * row.sse * (row.n_reps - 1.0) / row.n_reps;
  CHECK(row.rmse * row.rmse == doctest::Approx(replay).epsilon(1e-10));
}

TEST_CASE("estimator failures are counted and excluded") {
  McStudyConfig config;
  config.scenario.n = 50;
  config.n_reps = 10;
  config.base_seed = 17;
  // sqrt of a signed covariate fails at fit time in every replicate
  const McTable table = run_mc_study(
      config, {cal_spec("r ~ z1 + z2 + z3 + z4", "y ~ sqrt(z1)", "broken")});
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].failed_reps == 10);
  CHECK(table.rows[0].n_reps == 0);
}

TEST_CASE("parallel execution is bitwise deterministic") {
  McStudyConfig config;
  config.scenario.n = 120;
  config.n_reps = 24;
  config.base_seed = 2024;
  config.estimands = {EstimandSpec::mean(), EstimandSpec::tail_probability(240.0)};
  auto grid = ks_multipurpose_grid(false);

  config.parallelism = 1;
  const McTable serial = run_mc_study(config, grid);
  config.parallelism = 2;
  const McTable threaded = run_mc_study(config, grid);
  config.parallelism = 5;
  const McTable oversubscribed = run_mc_study(config, grid);

  Provenance prov;
  prov.version = "test";
  prov.config_hash = "t";
  const std::string a = mc_table_csv(serial, prov);
  const std::string b = mc_table_csv(threaded, prov);
  const std::string c = mc_table_csv(oversubscribed, prov);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("nested models study layout") {
  const McTable table = run_nested_models_study(80, 4, 3, 2, {"quadratic"});
  // 1 rho x 2 missingness x 4 cases
  CHECK(table.rows.size() == 8);
  CHECK(table.rows[0].estimator.find("(a)") != std::string::npos);
  CHECK(table.rows[7].estimator.find("misspecified") != std::string::npos);
}

TEST_CASE("resampling: degenerate missingness returns the full-sample value") {
  const FullSample full = synthetic_skewed_full(300, 8);
  ResamplingConfig config;
  config.truth_missingness = parse_formula("r ~ x1");
  config.truth_beta = Vector::Zero(2);
  config.truth_beta[0] = 40.0;  // logit 40: nothing is ever masked
  config.s_reps = 5;
  config.base_seed = 3;
  const ResamplingTable table =
      resampling_study(full, config, {ipw_spec("r ~ x1")});
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].rb_pct == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(table.rows[0].mse == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("resampling: oracle rows have zero RB and zero RE") {
  const FullSample full = synthetic_skewed_full(400, 21);
  ResamplingConfig config;
  config.truth_missingness = parse_formula("r ~ x1 + x2");
  config.truth_beta.resize(3);
  config.truth_beta << 0.4, 0.1, -0.05;
  config.s_reps = 40;
  config.base_seed = 9;

  const double mu_full = full.y.mean();
  EstimatorSpec oracle;
  oracle.kind = EstimatorSpec::Kind::Oracle;
  oracle.label = "oracle";
  oracle.oracle_values = {mu_full};

  const ResamplingTable table = resampling_study(
      full, config, {ipw_spec("r ~ x1 + x2"), oracle});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[1].rb_pct == doctest::Approx(0.0).epsilon(1e-12));
  REQUIRE(table.rows[1].re_vs_ipw.has_value());
  CHECK(*table.rows[1].re_vs_ipw == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("resampling on the synthetic stand-in shows the calibration gains") {
  const FullSample full = synthetic_skewed_full(800, 31);
  ResamplingConfig config;
  config.truth_missingness = parse_formula("r ~ x1 + I(x1>=3) + x2");
  config.truth_beta.resize(4);
  config.truth_beta << 1.2, -0.35, 0.25, -0.02;
  config.s_reps = 300;
  config.base_seed = 77;
  config.parallelism = 2;

  // grid: ipw and calibration under the correct and a misspecified
  // missingness model (dropping the x2 dependence)
  std::vector<EstimatorSpec> grid;
  grid.push_back(ipw_spec("r ~ x1 + I(x1>=3) + x2"));
  grid.push_back(cal_spec("r ~ x1 + I(x1>=3) + x2", "y ~ x1 + x2", "cal (correct)"));
  {
    EstimatorSpec ipw_bad = ipw_spec("r ~ x1 + I(x1>=3)");
    ipw_bad.label = "ipw (misspecified)";
    grid.push_back(std::move(ipw_bad));
  }
  grid.push_back(cal_spec("r ~ x1 + I(x1>=3)", "y ~ x1 + x2", "cal (misspecified)"));

  const ResamplingTable table = resampling_study(full, config, grid);
  REQUIRE(table.rows.size() == 4);
  const ResamplingRow& cal_correct = table.rows[1];
  const ResamplingRow& ipw_bad = table.rows[2];
  const ResamplingRow& cal_bad = table.rows[3];

  REQUIRE(cal_correct.re_vs_ipw.has_value());
  CHECK(*cal_correct.re_vs_ipw < 1.0);
  // the outcome model is exactly linear in (x1,x2), so calibration stays
  // nearly unbiased when the missingness model drops x2
  CHECK(std::abs(cal_bad.rb_pct) < 0.5 * std::abs(ipw_bad.rb_pct));
}

TEST_CASE("tail truth requires the no-interaction design") {
  CHECK_THROWS_AS(kang_schafer_truth(EstimandSpec::tail_probability(240.0), true),
                  ConfigError);
  CHECK(kang_schafer_truth(EstimandSpec::mean(), true) == 210.0);
}

TEST_SUITE_END();
