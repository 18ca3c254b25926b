// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gelcal/config.hpp"
#include "gelcal/studies.hpp"
#include "gelcal/table.hpp"

#ifndef GELCAL_VERSION
#define GELCAL_VERSION "0.0.0"
#endif

namespace {

using namespace gelcal;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// hash over the run configuration with the fields that cannot change the
// numbers (parallelism, output path) blanked, so reruns compare equal
std::string config_fingerprint(RunConfig config) {
  config.parallelism = 1;
  config.out.clear();
  return fnv1a_hex(serialize_run_config(config));
}

Provenance make_provenance(const RunConfig& config) {
  Provenance prov;
  prov.seed = config.seed;
  prov.config_hash = config_fingerprint(config);
  prov.version = GELCAL_VERSION;
  return prov;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct FlagOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::string> rho;
  std::optional<int> parallelism;
  std::optional<std::string> out;
  std::optional<std::string> input;
  bool no_box = false;

  void apply(RunConfig& config) const {
    if (seed) config.seed = *seed;
    if (reps) config.reps = *reps;
    if (rho) config.rho = *rho;
    if (parallelism) config.parallelism = *parallelism;
    if (out) config.out = *out;
    if (input) config.input = *input;
    if (no_box) config.box = false;
  }
};

int run_estimate(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("estimate: --input CSV required");
  CsvOptions csv;
  csv.missing_token = config.missing_token;
  const ObservedSample sample = load_csv(config.input, csv);

  std::vector<EstimandSpec> estimands;
  for (const auto& e : config.estimands) estimands.push_back(e.to_spec());
  const std::vector<EstimatorSpec> grid = build_estimator_grid(config);
  const Provenance prov = make_provenance(config);

  std::ostringstream report;
  report << "# gelcal " << prov.version << "\n";
  report << "# seed=" << config.seed << " config_hash=" << prov.config_hash << "\n";
  if (config.robustness_mode) {
    report << "# robustness mode: missingness model treated as possibly "
              "misspecified; plug-in SEs suppressed\n";
  }
  report << "estimator,estimand,value,se,ci_lo,ci_hi,n_complete,notes\n";

  std::ostringstream diagnostics;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const EvaluationOutput out = evaluate_estimator(sample, grid[g], estimands);
    for (std::size_t e = 0; e < estimands.size(); ++e) {
      const Estimate& est = out.estimates[e];
      report << est.method << ',' << estimands[e].label() << ',' << fmt(est.value)
             << ',' << (est.se ? fmt(*est.se) : "") << ','
             << (est.ci_lo ? fmt(*est.ci_lo) : "") << ','
             << (est.ci_hi ? fmt(*est.ci_hi) : "") << ',' << est.n_complete << ',';
      for (std::size_t k = 0; k < est.notes.size(); ++k) {
        if (k) report << "; ";
        report << est.notes[k];
      }
      report << "\n";
    }
    if (out.weight_diag) {
      const WeightDiagnostics& d = *out.weight_diag;
      diagnostics << "# " << grid[g].display_label()
                  << ": ess=" << fmt(d.effective_sample_size)
                  << " min_w=" << fmt(d.min_weight) << " max_w=" << fmt(d.max_weight)
                  << " negative=" << d.negative_count
                  << " max_moment_residual=" << fmt(d.max_moment_residual) << "\n";
    }
  }
  report << diagnostics.str();

  std::cout << report.str();
  if (!config.out.empty()) write_text_file(config.out, report.str());
  return 0;
}

int run_simulate(const RunConfig& config) {
  const Provenance prov = make_provenance(config);
  const std::string dir = config.out.empty() ? std::string(".") : config.out;
  std::filesystem::create_directories(dir);
  auto emit = [&](const std::string& stem, const McTable& table) {
    write_text_file(dir + "/" + stem + ".csv", mc_table_csv(table, prov));
    write_text_file(dir + "/" + stem + ".md", mc_table_markdown(table, prov));
    std::cout << mc_table_markdown(table, prov) << "\n";
  };

  McStudyConfig mc;
  mc.scenario.n = config.n;
  mc.n_reps = config.reps;
  mc.base_seed = config.seed;
  mc.parallelism = config.parallelism;

  const std::string stem = "table" + std::to_string(config.table);
  switch (config.table) {
    case 1:
    case 2: {
      mc.scenario.interaction = (config.table == 2);
      emit(stem + "a", run_mc_study(mc, ks_comparison_grid(false)));
      emit(stem + "b", run_mc_study(mc, ks_comparison_grid(true)));
      break;
    }
    case 3: {
      emit(stem + "a", run_mc_study(mc, ks_coverage_grid(false)));
      emit(stem + "b", run_mc_study(mc, ks_coverage_grid(true)));
      break;
    }
    case 4: {
      emit(stem, run_nested_models_study(config.n, config.reps, config.seed,
                                         config.parallelism));
      break;
    }
    case 5: {
      mc.estimands = {EstimandSpec::mean(), EstimandSpec::tail_probability(240.0)};
      emit(stem + "a", run_mc_study(mc, ks_multipurpose_grid(false)));
      emit(stem + "b", run_mc_study(mc, ks_multipurpose_grid(true)));
      break;
    }
    default:
      throw ConfigError("table must be 1..5");
  }
  return 0;
}

int run_resample_study(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("resample-study: --input CSV required");
  if (config.truth_missingness.empty() || config.truth_beta.empty()) {
    throw ConfigError("resample-study: truth_missingness formula and truth_beta required");
  }
  CsvOptions csv;
  csv.missing_token = config.missing_token;
  const FullSample full = load_full_csv(config.input, csv);

  ResamplingConfig rc;
  rc.truth_missingness = parse_formula(config.truth_missingness);
  rc.truth_beta = Eigen::Map<const Vector>(config.truth_beta.data(),
                                           static_cast<Eigen::Index>(config.truth_beta.size()));
  rc.s_reps = config.reps;
  rc.base_seed = config.seed;
  rc.parallelism = config.parallelism;
  rc.estimands.clear();
  for (const auto& e : config.estimands) rc.estimands.push_back(e.to_spec());

  // each configured estimator runs under the correct (truth) and, when
  // given, the misspecified working missingness model
  std::vector<std::pair<std::string, std::string>> models;
  models.emplace_back("correct", config.truth_missingness);
  if (!config.working_missingness.empty()) {
    models.emplace_back("misspecified", config.working_missingness);
  }
  std::vector<EstimatorSpec> grid;
  for (const auto& [tag, formula] : models) {
    RunConfig sub = config;
    sub.propensity = formula;
    for (EstimatorSpec spec : build_estimator_grid(sub)) {
      spec.label = spec.display_label() + " (" + tag + ")";
      spec.attach_se = false;
      grid.push_back(std::move(spec));
    }
  }

  const ResamplingTable table = resampling_study(full, rc, grid);
  const Provenance prov = make_provenance(config);
  std::cout << resampling_table_markdown(table, prov);
  if (!config.out.empty()) {
    write_text_file(config.out + ".csv", resampling_table_csv(table, prov));
    write_text_file(config.out + ".md", resampling_table_markdown(table, prov));
  }
  return 0;
}

int run_formula_check(const std::string& text) {
  const FormulaSpec spec = parse_formula(text);
  std::cout << "ok: " << spec.text() << "\n";
  std::cout << "response: " << spec.response;
  if (spec.response_cmp) {
    std::cout << " (indicator " << to_string(*spec.response_cmp) << " "
              << spec.response_threshold << ")";
  }
  std::cout << "\nterms: " << spec.terms.size() << "\n";
  for (const auto& t : spec.terms) std::cout << "  " << t.label() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized empirical likelihood calibration estimation for "
               "missing-response data"};
  app.set_version_flag("--version", GELCAL_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  FlagOverrides flags;
  RunConfig config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { flags.seed = v; }, "RNG base seed");
    cmd->add_option_function<int>(
        "--reps", [&](int v) { flags.reps = v; }, "replicate count");
    cmd->add_option_function<std::string>(
        "--rho", [&](std::string v) { flags.rho = std::move(v); },
        "rho family: quadratic|el|et|cressie-read:<theta>");
    cmd->add_option_function<int>(
        "--parallelism", [&](int v) { flags.parallelism = v; }, "worker threads");
    cmd->add_option_function<std::string>(
        "--out", [&](std::string v) { flags.out = std::move(v); }, "output path");
    cmd->add_option_function<std::string>(
        "--input", [&](std::string v) { flags.input = std::move(v); }, "input CSV");
    cmd->add_flag("--no-box", flags.no_box, "disable the feasibility box");
  };

  auto* estimate = app.add_subcommand("estimate", "estimate from a CSV dataset");
  add_common(estimate);
  std::vector<std::string> working_flags, estimand_flags, estimator_flags;
  std::string propensity_flag;
  bool robustness_flag = false;
  estimate->add_option("--propensity", propensity_flag, "missingness formula, response r");
  estimate->add_option("--working", working_flags, "working model formula (repeatable)");
  estimate->add_option("--estimand", estimand_flags, "mean | tail:<c> (repeatable)");
  estimate->add_option("--estimators", estimator_flags,
                       "ipw|ipw_hajek|aipw|ols|cal|cal2 (repeatable)");
  estimate->add_flag("--robustness-mode", robustness_flag,
                     "suppress plug-in SEs (missingness model may be wrong)");

  auto* simulate = app.add_subcommand("simulate", "Kang-Schafer Monte Carlo tables");
  add_common(simulate);
  int table_flag = 0;
  long n_flag = 0;
  simulate->add_option("--table", table_flag, "which table layout (1..5)");
  simulate->add_option("--n", n_flag, "sample size per replicate");

  auto* resample = app.add_subcommand("resample-study",
                                      "repeated masking of a fully observed CSV");
  add_common(resample);
  std::string truth_formula_flag, working_miss_flag;
  std::vector<double> truth_beta_flag;
  resample->add_option("--truth-missingness", truth_formula_flag,
                       "masking model formula, response r");
  resample->add_option("--truth-beta", truth_beta_flag,
                       "masking model coefficients, intercept first");
  resample->add_option("--working-missingness", working_miss_flag,
                       "misspecified missingness formula to compare");
  resample->add_option("--working", working_flags, "working model formula (repeatable)");
  resample->add_option("--estimand", estimand_flags, "mean | tail:<c> (repeatable)");
  resample->add_option("--estimators", estimator_flags, "estimator kinds (repeatable)");

  auto* formula_check = app.add_subcommand("formula-check", "parse a model formula");
  std::string formula_text;
  formula_check->add_option("formula", formula_text, "formula text")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (formula_check->parsed()) return run_formula_check(formula_text);

    if (!config_path.empty()) config = parse_run_config(slurp(config_path));
    flags.apply(config);

    auto parse_estimand_flag = [](const std::string& text) {
      EstimandConfig e;
      if (text == "mean") return e;
      if (text.rfind("tail:", 0) == 0) {
        e.kind = "tail";
        e.c = std::stod(text.substr(5));
        return e;
      }
      throw ConfigError("unknown estimand '" + text + "' (mean or tail:<c>)");
    };

    if (estimate->parsed()) {
      config.workflow = "estimate";
      if (!propensity_flag.empty()) config.propensity = propensity_flag;
      if (!working_flags.empty()) config.working = working_flags;
      if (!estimator_flags.empty()) config.estimators = estimator_flags;
      if (robustness_flag) config.robustness_mode = true;
      if (!estimand_flags.empty()) {
        config.estimands.clear();
        for (const auto& t : estimand_flags) config.estimands.push_back(parse_estimand_flag(t));
      }
      // revalidate the merged configuration
      config = parse_run_config(serialize_run_config(config));
      return run_estimate(config);
    }
    if (simulate->parsed()) {
      config.workflow = "simulate";
      if (table_flag > 0) config.table = table_flag;
      if (n_flag > 0) config.n = n_flag;
      config = parse_run_config(serialize_run_config(config));
      return run_simulate(config);
    }
    if (resample->parsed()) {
      config.workflow = "resample-study";
      if (!truth_formula_flag.empty()) config.truth_missingness = truth_formula_flag;
      if (!truth_beta_flag.empty()) config.truth_beta = truth_beta_flag;
      if (!working_miss_flag.empty()) config.working_missingness = working_miss_flag;
      if (!working_flags.empty()) config.working = working_flags;
      if (!estimator_flags.empty()) config.estimators = estimator_flags;
      if (!estimand_flags.empty()) {
        config.estimands.clear();
        for (const auto& t : estimand_flags) config.estimands.push_back(parse_estimand_flag(t));
      }
      config = parse_run_config(serialize_run_config(config));
      return run_resample_study(config);
    }
  } catch (const gelcal::Error& e) {
    nlohmann::json err;
    err["error"]["type"] = e.type();
    err["error"]["message"] = e.what();
    err["error"]["exit_code"] = static_cast<int>(e.category());
    std::cerr << err.dump() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"]["type"] = "Internal";
    err["error"]["message"] = e.what();
    err["error"]["exit_code"] = 2;
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
