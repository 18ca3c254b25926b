// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/simulation.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "gelcal/rng.hpp"

namespace gelcal {

namespace {

constexpr double kKsMean = 210.0;
const std::vector<std::string> kKsColumns = {"z1", "z2", "z3", "z4",
                                             "x1", "x2", "x3", "x4"};

double expit(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

// One replicate cell: either a value (with optional se/ci) or a failure.
struct CellResult {
  bool ok = false;
  double value = 0.0;
  bool has_ci = false;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct ReplicateOutcome {
  std::vector<CellResult> cells;  // grid-major, then estimand
  SolveAudit audit;
};

ReplicateOutcome evaluate_grid(const ObservedSample& sample,
                               const std::vector<EstimatorSpec>& grid,
                               const std::vector<EstimandSpec>& estimands) {
  ReplicateOutcome outcome;
  outcome.cells.resize(grid.size() * estimands.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    try {
      const EvaluationOutput out = evaluate_estimator(sample, grid[g], estimands);
      if (out.weight_diag) outcome.audit.absorb(*out.weight_diag, out.box_active);
      for (std::size_t e = 0; e < estimands.size(); ++e) {
        CellResult& cell = outcome.cells[g * estimands.size() + e];
        const Estimate& est = out.estimates[e];
        cell.ok = true;
        cell.value = est.value;
        if (est.se && est.ci_lo && est.ci_hi) {
          cell.has_ci = true;
          cell.se = *est.se;
          cell.ci_lo = *est.ci_lo;
          cell.ci_hi = *est.ci_hi;
        }
      }
    } catch (const Error&) {
      // failure recorded for the whole estimator row of this replicate
    }
  }
  return outcome;
}

// Runs `body(k)` for k in [0, reps) on `parallelism` workers.  Outputs are
// stored per replicate, so the aggregate does not depend on scheduling.
template <typename Body>
void parallel_for(int reps, int parallelism, const Body& body) {
  if (parallelism <= 1) {
    for (int k = 0; k < reps; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= reps) break;
      body(k);
    }
  };
  std::vector<std::thread> threads;
  const int n_threads = std::min(parallelism, reps);
  threads.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

}  // namespace

void SolveAudit::absorb(const WeightDiagnostics& diag, bool boxed) {
  max_moment_residual = std::max(max_moment_residual, diag.max_moment_residual);
  max_weight_sum_dev = std::max(max_weight_sum_dev, std::abs(diag.weight_sum - 1.0));
  if (boxed) min_weight_boxed = std::min(min_weight_boxed, diag.min_weight);
  ++solves;
}

void SolveAudit::merge(const SolveAudit& other) {
  max_moment_residual = std::max(max_moment_residual, other.max_moment_residual);
  max_weight_sum_dev = std::max(max_weight_sum_dev, other.max_weight_sum_dev);
  min_weight_boxed = std::min(min_weight_boxed, other.min_weight_boxed);
  solves += other.solves;
}

Eigen::Vector4d kang_schafer_transform(const Eigen::Vector4d& z) {
  Eigen::Vector4d x;
  x[0] = std::exp(0.5 * z[0]);
  x[1] = z[1] / (1.0 + std::exp(z[0]));
  x[2] = std::pow(z[0] * z[2] / 25.0 + 0.6, 3);
  x[3] = (z[1] + z[3] + 20.0) * (z[1] + z[3] + 20.0);
  return x;
}

double kang_schafer_missingness_logit(const Eigen::Vector4d& z) {
  return -z[0] + 0.5 * z[1] - 0.25 * z[2] - 0.1 * z[3];
}

ScenarioReplicate generate_kang_schafer(const KangSchaferConfig& config) {
  if (config.n < 1) throw ConfigError("generate_kang_schafer: n must be >= 1");
  RngStream rng(config.seed);

  ScenarioReplicate rep;
  rep.full.y.resize(config.n);
  rep.full.x.resize(config.n, 8);
  rep.full.column_names = kKsColumns;
  std::vector<std::uint8_t> r(static_cast<std::size_t>(config.n));

  for (Eigen::Index i = 0; i < config.n; ++i) {
    Eigen::Vector4d z;
    for (int j = 0; j < 4; ++j) z[j] = rng.next_normal();
    const double eps = rng.next_normal();
    const double u_miss = rng.next_uniform();

    double mean = kKsMean + 27.4 * z[0] + 13.7 * (z[1] + z[2] + z[3]);
    if (config.interaction) mean += 20.0 * z[0] * z[1];
    rep.full.y[i] = mean + eps;
    rep.full.x.row(i).head<4>() = z.transpose();
    rep.full.x.row(i).tail<4>() = kang_schafer_transform(z).transpose();
    r[static_cast<std::size_t>(i)] =
        u_miss < expit(kang_schafer_missingness_logit(z)) ? 1 : 0;
  }

  rep.observed = rep.full.mask(r);
  return rep;
}

double kang_schafer_truth(const EstimandSpec& estimand, bool interaction) {
  switch (estimand.kind) {
    case EstimandSpec::Kind::Mean:
      return kKsMean;
    case EstimandSpec::Kind::TailProbability: {
      if (interaction) {
        throw ConfigError("tail truth is not available in closed form with the "
                          "interaction term");
      }
      const double var = 27.4 * 27.4 + 3.0 * 13.7 * 13.7 + 1.0;
      const double zscore = (estimand.c - kKsMean) / std::sqrt(var);
      return 0.5 * std::erfc(zscore / std::sqrt(2.0));
    }
    case EstimandSpec::Kind::FunctionalGrid:
      throw ConfigError("no closed-form truth for grid estimands");
  }
  throw ConfigError("unknown estimand");
}

McTable run_mc_study(const McStudyConfig& config, const std::vector<EstimatorSpec>& grid) {
  if (config.n_reps < 1) throw ConfigError("run_mc_study: n_reps must be >= 1");
  if (grid.empty()) throw ConfigError("run_mc_study: empty estimator grid");

  std::vector<double> truth;
  truth.reserve(config.estimands.size());
  for (const auto& estimand : config.estimands) {
    truth.push_back(kang_schafer_truth(estimand, config.scenario.interaction));
  }

  const std::size_t n_cells = grid.size() * config.estimands.size();
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.n_reps));
  parallel_for(config.n_reps, config.parallelism, [&](int k) {
    KangSchaferConfig scenario = config.scenario;
    scenario.seed = config.base_seed + static_cast<std::uint64_t>(k);
    const ScenarioReplicate rep = generate_kang_schafer(scenario);
    outcomes[static_cast<std::size_t>(k)] =
        evaluate_grid(rep.observed, grid, config.estimands);
  });

  McTable table;
  table.base_seed = config.base_seed;
  table.n_reps = config.n_reps;
  table.n = config.scenario.n;
  for (const auto& outcome : outcomes) table.audit.merge(outcome.audit);

  // first pass: per-cell moments over successful replicates
  struct CellAgg {
    double sum = 0.0, sum_sq = 0.0, sum_err_sq = 0.0, sum_se = 0.0;
    long covered = 0, with_ci = 0;
    int used = 0;
  };
  std::vector<CellAgg> agg(n_cells);
  for (const auto& outcome : outcomes) {
    for (std::size_t c = 0; c < n_cells; ++c) {
      const CellResult& cell = outcome.cells[c];
      if (!cell.ok) continue;
      CellAgg& a = agg[c];
      const double mu = truth[c % config.estimands.size()];
      a.sum += cell.value;
      a.sum_sq += cell.value * cell.value;
      a.sum_err_sq += (cell.value - mu) * (cell.value - mu);
      if (cell.has_ci) {
        ++a.with_ci;
        a.sum_se += cell.se;
        if (cell.ci_lo <= mu && mu <= cell.ci_hi) ++a.covered;
      }
      ++a.used;
    }
  }

  std::vector<double> rmse_ols(config.estimands.size(),
                               std::numeric_limits<double>::quiet_NaN());
  std::vector<double> mse_ipw(config.estimands.size(),
                              std::numeric_limits<double>::quiet_NaN());

  table.rows.resize(n_cells);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t e = 0; e < config.estimands.size(); ++e) {
      const std::size_t c = g * config.estimands.size() + e;
      const CellAgg& a = agg[c];
      McRow& row = table.rows[c];
      row.estimator = grid[g].display_label();
      row.estimand = config.estimands[e].label();
      row.n_reps = a.used;
      row.failed_reps = config.n_reps - a.used;
      if (a.used > 0) {
        const double mean = a.sum / a.used;
        row.bias = mean - truth[e];
        const double var =
            a.used > 1 ? (a.sum_sq - a.used * mean * mean) / (a.used - 1) : 0.0;
        row.sse = std::sqrt(std::max(0.0, var));
        row.rmse = std::sqrt(a.sum_err_sq / a.used);
        if (a.with_ci == a.used && a.used > 0) {
          row.see = a.sum_se / a.used;
          row.coverage = static_cast<double>(a.covered) / a.used;
        }
        if (grid[g].kind == EstimatorSpec::Kind::Ols) rmse_ols[e] = row.rmse;
        if (grid[g].kind == EstimatorSpec::Kind::Ipw) {
          mse_ipw[e] = a.sum_err_sq / a.used;
        }
      }
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t e = 0; e < config.estimands.size(); ++e) {
      McRow& row = table.rows[g * config.estimands.size() + e];
      if (row.n_reps == 0) continue;
      if (std::isfinite(rmse_ols[e]) && rmse_ols[e] > 0.0) {
        row.re_rmse_vs_ols = row.rmse / rmse_ols[e];
      }
      if (std::isfinite(mse_ipw[e]) && mse_ipw[e] > 0.0) {
        row.re_mse_vs_ipw = row.rmse * row.rmse / mse_ipw[e];
      }
    }
  }
  return table;
}

McTable run_nested_models_study(Eigen::Index n, int n_reps, std::uint64_t seed,
                                int parallelism, const std::vector<std::string>& rhos) {
  const std::vector<std::string> z_terms = {"z1", "z2", "z3", "z4"};
  const char* case_names = "abcd";

  std::vector<EstimatorSpec> grid;
  for (const auto& rho : rhos) {
    for (int missp = 0; missp < 2; ++missp) {
      for (int cases = 1; cases <= 4; ++cases) {
        EstimatorSpec spec;
        spec.kind = EstimatorSpec::Kind::Cal;
        spec.use_box = false;
        spec.rho = rho;
        spec.propensity = parse_formula(missp ? "r ~ x1 + x2 + x3 + x4"
                                              : "r ~ z1 + z2 + z3 + z4");
        // nested least-squares models share columns, so case (k) calibrates
        // on the span of the largest model
        std::string f = "y ~ z1";
        for (int t = 2; t <= cases; ++t) f += " + z" + std::to_string(t);
        spec.working.push_back(parse_formula(f));
        spec.label = "cal[" + rho + "] (" + std::string(1, case_names[cases - 1]) +
                     ") " + (missp ? "misspecified" : "correct");
        grid.push_back(std::move(spec));
      }
    }
  }

  McStudyConfig config;
  config.scenario.n = n;
  config.n_reps = n_reps;
  config.base_seed = seed;
  config.parallelism = parallelism;
  return run_mc_study(config, grid);
}

ResamplingTable resampling_study(const FullSample& full, const ResamplingConfig& config,
                                 const std::vector<EstimatorSpec>& grid) {
  if (config.truth_missingness.response != "r") {
    throw ConfigError("resampling_study: truth missingness response must be 'r'");
  }
  const ObservedSample base = full.as_observed();
  const Matrix truth_design = build_design(base, config.truth_missingness.terms);
  if (truth_design.cols() != config.truth_beta.size()) {
    throw ConfigError("resampling_study: truth_beta length must match the "
                      "truth formula design (intercept included)");
  }
  const Vector truth_pi =
      (truth_design * config.truth_beta).unaryExpr([](double e) { return expit(e); });

  std::vector<double> full_values;
  for (const auto& estimand : config.estimands) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < full.y.size(); ++i) total += estimand.apply(full.y[i]);
    full_values.push_back(total / static_cast<double>(full.y.size()));
  }

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.s_reps));
  parallel_for(config.s_reps, config.parallelism, [&](int k) {
    RngStream rng(config.base_seed + static_cast<std::uint64_t>(k));
    std::vector<std::uint8_t> r(static_cast<std::size_t>(full.y.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = rng.next_bernoulli(truth_pi[static_cast<Eigen::Index>(i)]) ? 1 : 0;
    }
    ObservedSample masked;
    try {
      masked = full.mask(r);
    } catch (const Error&) {
      return;  // e.g. a draw with zero complete cases
    }
    outcomes[static_cast<std::size_t>(k)] =
        evaluate_grid(masked, grid, config.estimands);
  });

  ResamplingTable table;
  table.base_seed = config.base_seed;
  table.n_reps = config.s_reps;
  table.full_sample_values = full_values;
  for (const auto& outcome : outcomes) table.audit.merge(outcome.audit);

  const std::size_t n_cells = grid.size() * config.estimands.size();
  std::vector<double> mse_ipw(config.estimands.size(),
                              std::numeric_limits<double>::quiet_NaN());
  table.rows.resize(n_cells);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t e = 0; e < config.estimands.size(); ++e) {
      const std::size_t c = g * config.estimands.size() + e;
      double rb_sum = 0.0, mse_sum = 0.0;
      int used = 0;
      for (const auto& outcome : outcomes) {
        if (outcome.cells.empty() || !outcome.cells[c].ok) continue;
        const double v = outcome.cells[c].value;
        rb_sum += (v - full_values[e]) / full_values[e];
        mse_sum += (v - full_values[e]) * (v - full_values[e]);
        ++used;
      }
      ResamplingRow& row = table.rows[c];
      row.estimator = grid[g].display_label();
      row.estimand = config.estimands[e].label();
      row.n_reps = used;
      row.failed_reps = config.s_reps - used;
      if (used > 0) {
        row.rb_pct = 100.0 * rb_sum / used;
        row.mse = mse_sum / used;
        if (grid[g].kind == EstimatorSpec::Kind::Ipw) mse_ipw[e] = row.mse;
      }
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t e = 0; e < config.estimands.size(); ++e) {
      ResamplingRow& row = table.rows[g * config.estimands.size() + e];
      if (row.n_reps > 0 && std::isfinite(mse_ipw[e]) && mse_ipw[e] > 0.0) {
        row.re_vs_ipw = row.mse / mse_ipw[e];
      }
    }
  }
  return table;
}

}  // namespace gelcal
