// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/studies.hpp"

#include <sstream>

namespace gelcal {

namespace {

const std::vector<std::string> kRhos = {"quadratic", "el", "et"};

std::string rho_tag(const std::string& rho) {
  if (rho == "quadratic") return "q";
  return rho;
}

}  // namespace

std::string ks_propensity_formula(bool misspecified) {
  return misspecified ? "r ~ x1 + x2 + x3 + x4" : "r ~ z1 + z2 + z3 + z4";
}

std::string ks_outcome_formula(bool misspecified) {
  return misspecified ? "y ~ x1 + x2 + x3 + x4" : "y ~ z1 + z2 + z3 + z4";
}

namespace {

// all products of 2..4 distinct base factors
std::string interaction_formula(const std::vector<std::string>& base) {
  std::ostringstream f;
  f << "y ~ ";
  bool first = true;
  const std::size_t n = base.size();
  for (std::size_t mask = 1; mask < (1u << n); ++mask) {
    int bits = 0;
    for (std::size_t j = 0; j < n; ++j) bits += (mask >> j) & 1u;
    if (bits < 2) continue;
    if (!first) f << " + ";
    first = false;
    bool first_factor = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (!((mask >> j) & 1u)) continue;
      if (!first_factor) f << ':';
      first_factor = false;
      f << base[j];
    }
  }
  return f.str();
}

}  // namespace

std::string ks_extra_outcome_formula(bool misspecified) {
  // every second and higher order interaction of the base variables; the
  // skewed positive covariates enter through square roots, x2 changes sign
  // and stays untransformed
  if (misspecified) {
    return interaction_formula({"sqrt(x1)", "x2", "sqrt(x3)", "sqrt(x4)"});
  }
  return interaction_formula({"z1", "z2", "z3", "z4"});
}

std::vector<EstimatorSpec> ks_comparison_grid(bool misspecified) {
  const FormulaSpec propensity = parse_formula(ks_propensity_formula(misspecified));
  const FormulaSpec outcome = parse_formula(ks_outcome_formula(misspecified));
  const FormulaSpec extra = parse_formula(ks_extra_outcome_formula(misspecified));

  std::vector<EstimatorSpec> grid;
  {
    EstimatorSpec ipw;
    ipw.kind = EstimatorSpec::Kind::Ipw;
    ipw.label = "ipw";
    ipw.propensity = propensity;
    grid.push_back(std::move(ipw));
  }
  {
    EstimatorSpec aipw;
    aipw.kind = EstimatorSpec::Kind::Aipw;
    aipw.label = "aipw";
    aipw.propensity = propensity;
    aipw.working = {outcome};
    grid.push_back(std::move(aipw));
  }
  {
    EstimatorSpec ols;
    ols.kind = EstimatorSpec::Kind::Ols;
    ols.label = "ols";
    ols.working = {outcome};
    grid.push_back(std::move(ols));
  }
  // the comparison tables run the unrestricted maximization, matching the
  // closed-form quadratic solution; el/et weights are non-negative anyway
  for (const auto& rho : kRhos) {
    EstimatorSpec dr;
    dr.kind = EstimatorSpec::Kind::Cal;
    dr.use_box = false;
    dr.rho = rho;
    dr.label = "cal_" + rho_tag(rho) + "_dr";
    dr.propensity = propensity;
    dr.working = {outcome};
    grid.push_back(std::move(dr));
  }
  for (const auto& rho : kRhos) {
    EstimatorSpec mr;
    mr.kind = EstimatorSpec::Kind::Cal;
    mr.use_box = false;
    mr.rho = rho;
    mr.label = "cal_" + rho_tag(rho) + "_mr";
    mr.propensity = propensity;
    mr.working = {outcome, extra};
    grid.push_back(std::move(mr));
  }
  return grid;
}

std::vector<EstimatorSpec> ks_coverage_grid(bool misspecified) {
  const FormulaSpec propensity = parse_formula(ks_propensity_formula(misspecified));
  const FormulaSpec outcome = parse_formula(ks_outcome_formula(misspecified));

  std::vector<EstimatorSpec> grid;
  for (const auto& rho : kRhos) {
    EstimatorSpec spec;
    spec.kind = EstimatorSpec::Kind::Cal;
    spec.use_box = false;
    spec.rho = rho;
    spec.label = "cal_" + rho_tag(rho);
    spec.propensity = propensity;
    spec.working = {outcome};
    spec.attach_se = true;
    grid.push_back(std::move(spec));
  }
  return grid;
}

std::vector<EstimatorSpec> ks_multipurpose_grid(bool misspecified) {
  const FormulaSpec propensity = parse_formula(ks_propensity_formula(misspecified));
  const FormulaSpec m1 = parse_formula("y ~ z1 + z2 + z3 + z4");
  const FormulaSpec m2 = parse_formula("I(y>240) ~ z1 + z2 + z3 + z4");

  std::vector<EstimatorSpec> grid;
  {
    EstimatorSpec ipw;
    ipw.kind = EstimatorSpec::Kind::Ipw;
    ipw.label = "ipw";
    ipw.propensity = propensity;
    grid.push_back(std::move(ipw));
  }
  const std::vector<std::pair<std::string, std::vector<FormulaSpec>>> cases = {
      {"cal_q_m1", {m1}},
      {"cal_q_m2", {m2}},
      {"cal_q_m1m2", {m1, m2}},
  };
  for (const auto& [label, working] : cases) {
    EstimatorSpec spec;
    spec.kind = EstimatorSpec::Kind::Cal;
    spec.use_box = false;
    spec.rho = "quadratic";
    spec.label = label;
    spec.propensity = propensity;
    spec.working = working;
    grid.push_back(std::move(spec));
  }
  return grid;
}

}  // namespace gelcal
