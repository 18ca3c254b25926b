// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/config.hpp"

#include <algorithm>
#include <json.hpp>

namespace gelcal {

namespace {

using nlohmann::json;

std::function<double(double)> tabulated_h(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2) {
    throw ConfigError("tabulated h needs at least two (y, h) points");
  }
  std::sort(table.begin(), table.end());
  return [table = std::move(table)](double y) {
    if (y <= table.front().first) return table.front().second;
    if (y >= table.back().first) return table.back().second;
    auto hi = std::upper_bound(table.begin(), table.end(), std::make_pair(y, 0.0),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
    auto lo = hi - 1;
    const double t = (y - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  };
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

EstimandSpec EstimandConfig::to_spec() const {
  if (kind == "mean") return EstimandSpec::mean();
  if (kind == "tail") return EstimandSpec::tail_probability(c);
  if (kind == "grid") {
    std::function<double(double)> fn;
    if (!h_table.empty()) {
      fn = tabulated_h(h_table);
    } else if (h == "identity") {
      fn = [](double y) { return y; };
    } else if (h == "indicator") {
      const double thr = h_c;
      fn = [thr](double y) { return y > thr ? 1.0 : 0.0; };
    } else {
      throw ConfigError("unknown grid integrand '" + h + "'");
    }
    return EstimandSpec::functional_grid(std::move(fn), cutpoints);
  }
  throw ConfigError("unknown estimand kind '" + kind + "'");
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  RunConfig c;
  read_if(j, "workflow", c.workflow);
  read_if(j, "input", c.input);
  read_if(j, "missing_token", c.missing_token);
  read_if(j, "rho", c.rho);
  read_if(j, "box", c.box);
  read_if(j, "propensity", c.propensity);
  read_if(j, "working", c.working);
  read_if(j, "estimators", c.estimators);
  read_if(j, "robustness_mode", c.robustness_mode);
  read_if(j, "se", c.se);
  read_if(j, "ci_level", c.ci_level);
  read_if(j, "seed", c.seed);
  read_if(j, "reps", c.reps);
  read_if(j, "parallelism", c.parallelism);
  read_if(j, "out", c.out);
  read_if(j, "table", c.table);
  if (j.contains("n")) c.n = j.at("n").get<long>();
  read_if(j, "truth_missingness", c.truth_missingness);
  read_if(j, "truth_beta", c.truth_beta);
  read_if(j, "working_missingness", c.working_missingness);

  if (j.contains("estimands")) {
    c.estimands.clear();
    for (const auto& e : j.at("estimands")) {
      EstimandConfig ec;
      read_if(e, "kind", ec.kind);
      read_if(e, "c", ec.c);
      read_if(e, "cutpoints", ec.cutpoints);
      read_if(e, "h", ec.h);
      read_if(e, "h_c", ec.h_c);
      if (e.contains("h_table")) {
        for (const auto& row : e.at("h_table")) {
          if (!row.is_array() || row.size() != 2) {
            throw ConfigError("h_table rows must be [y, h] pairs");
          }
          ec.h_table.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
      }
      c.estimands.push_back(std::move(ec));
    }
  }

  // schema validation before any computation
  static const std::vector<std::string> workflows = {"estimate", "simulate",
                                                     "resample-study"};
  if (std::find(workflows.begin(), workflows.end(), c.workflow) == workflows.end()) {
    throw ConfigError("unknown workflow '" + c.workflow + "'");
  }
  static const std::vector<std::string> kinds = {"ipw", "ipw_hajek", "aipw",
                                                 "ols",  "cal",      "cal2"};
  for (const auto& est : c.estimators) {
    if (std::find(kinds.begin(), kinds.end(), est) == kinds.end()) {
      throw ConfigError("unknown estimator '" + est + "'");
    }
  }
  parse_rho(c.rho);
  if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) {
    throw ConfigError("ci_level must lie in (0,1)");
  }
  if (c.reps < 1) throw ConfigError("reps must be >= 1");
  if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (c.workflow == "simulate" && (c.table < 1 || c.table > 5)) {
    throw ConfigError("table must be 1..5");
  }
  for (const auto& e : c.estimands) e.to_spec();  // validates
  if (!c.propensity.empty()) parse_formula(c.propensity);
  for (const auto& w : c.working) parse_formula(w);
  if (!c.truth_missingness.empty()) parse_formula(c.truth_missingness);
  if (!c.working_missingness.empty()) parse_formula(c.working_missingness);
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  json j;
  j["workflow"] = c.workflow;
  j["input"] = c.input;
  j["missing_token"] = c.missing_token;
  j["rho"] = c.rho;
  j["box"] = c.box;
  j["propensity"] = c.propensity;
  j["working"] = c.working;
  j["estimators"] = c.estimators;
  j["robustness_mode"] = c.robustness_mode;
  j["se"] = c.se;
  j["ci_level"] = c.ci_level;
  j["seed"] = c.seed;
  j["reps"] = c.reps;
  j["parallelism"] = c.parallelism;
  j["out"] = c.out;
  j["table"] = c.table;
  j["n"] = static_cast<long>(c.n);
  j["truth_missingness"] = c.truth_missingness;
  j["truth_beta"] = c.truth_beta;
  j["working_missingness"] = c.working_missingness;
  j["estimands"] = json::array();
  for (const auto& e : c.estimands) {
    json je;
    je["kind"] = e.kind;
    je["c"] = e.c;
    je["cutpoints"] = e.cutpoints;
    je["h"] = e.h;
    je["h_c"] = e.h_c;
    je["h_table"] = json::array();
    for (const auto& [y, hy] : e.h_table) je["h_table"].push_back({y, hy});
    j["estimands"].push_back(std::move(je));
  }
  return j.dump(2);
}

std::vector<EstimatorSpec> build_estimator_grid(const RunConfig& config) {
  std::vector<EstimatorSpec> grid;
  std::optional<FormulaSpec> propensity;
  if (!config.propensity.empty()) propensity = parse_formula(config.propensity);
  std::vector<FormulaSpec> working;
  for (const auto& w : config.working) working.push_back(parse_formula(w));

  for (const auto& name : config.estimators) {
    EstimatorSpec spec;
    spec.label = name;
    spec.rho = config.rho;
    spec.use_box = config.box;
    spec.propensity = propensity;
    spec.ci_level = config.ci_level;
    if (name == "ipw") {
      spec.kind = EstimatorSpec::Kind::Ipw;
    } else if (name == "ipw_hajek") {
      spec.kind = EstimatorSpec::Kind::IpwHajek;
    } else if (name == "aipw") {
      spec.kind = EstimatorSpec::Kind::Aipw;
      spec.working = working;
    } else if (name == "ols") {
      spec.kind = EstimatorSpec::Kind::Ols;
      spec.working = working;
    } else if (name == "cal") {
      spec.kind = EstimatorSpec::Kind::Cal;
      spec.working = working;
      spec.attach_se = config.se && !config.robustness_mode;
    } else if (name == "cal2") {
      spec.kind = EstimatorSpec::Kind::Cal2;
      spec.working = working;
    } else {
      throw ConfigError("unknown estimator '" + name + "'");
    }
    grid.push_back(std::move(spec));
  }
  return grid;
}

}  // namespace gelcal
