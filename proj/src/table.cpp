// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/table.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gelcal {

namespace {

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string opt_full(const std::optional<double>& v) { return v ? full(*v) : ""; }

std::string header_lines(const Provenance& prov, std::uint64_t seed) {
  std::ostringstream s;
  s << "# gelcal " << prov.version << "\n";
  s << "# seed=" << seed << " config_hash=" << prov.config_hash << "\n";
  return s.str();
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string mc_table_csv(const McTable& table, const Provenance& prov) {
  std::ostringstream out;
  out << header_lines(prov, table.base_seed);
  out << "# n=" << table.n << " reps=" << table.n_reps << "\n";
  out << "estimator,estimand,bias,sse,rmse,re_rmse_vs_ols,re_mse_vs_ipw,see,"
         "coverage,n_reps,failed_reps\n";
  for (const auto& row : table.rows) {
    out << row.estimator << ',' << row.estimand << ',' << full(row.bias) << ','
        << full(row.sse) << ',' << full(row.rmse) << ','
        << opt_full(row.re_rmse_vs_ols) << ',' << opt_full(row.re_mse_vs_ipw)
        << ',' << opt_full(row.see) << ',' << opt_full(row.coverage) << ','
        << row.n_reps << ',' << row.failed_reps << "\n";
  }
  return out.str();
}

std::string mc_table_markdown(const McTable& table, const Provenance& prov) {
  std::ostringstream out;
  out << header_lines(prov, table.base_seed);
  out << "\nMonte Carlo study, n=" << table.n << ", " << table.n_reps
      << " replicates\n\n";
  out << "| estimator | estimand | bias | SSE | RMSE | RE(ols) | RE(ipw) | SEE "
         "| coverage % | failed |\n";
  out << "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& row : table.rows) {
    out << "| " << row.estimator << " | " << row.estimand << " | "
        << fixed2(row.bias) << " | " << fixed2(row.sse) << " | "
        << fixed2(row.rmse) << " | "
        << (row.re_rmse_vs_ols ? fixed2(*row.re_rmse_vs_ols) : "")
        << " | " << (row.re_mse_vs_ipw ? fixed2(*row.re_mse_vs_ipw) : "")
        << " | " << (row.see ? fixed2(*row.see) : "") << " | "
        << (row.coverage ? fixed2(100.0 * *row.coverage) : "") << " | "
        << row.failed_reps << " |\n";
  }
  return out.str();
}

std::string resampling_table_csv(const ResamplingTable& table, const Provenance& prov) {
  std::ostringstream out;
  out << header_lines(prov, table.base_seed);
  out << "# reps=" << table.n_reps;
  out << " full_sample_values=";
  for (std::size_t i = 0; i < table.full_sample_values.size(); ++i) {
    if (i) out << ';';
    out << full(table.full_sample_values[i]);
  }
  out << "\n";
  out << "estimator,estimand,rb_pct,mse,re_vs_ipw,n_reps,failed_reps\n";
  for (const auto& row : table.rows) {
    out << row.estimator << ',' << row.estimand << ',' << full(row.rb_pct) << ','
        << full(row.mse) << ',' << opt_full(row.re_vs_ipw) << ',' << row.n_reps
        << ',' << row.failed_reps << "\n";
  }
  return out.str();
}

std::string resampling_table_markdown(const ResamplingTable& table,
                                      const Provenance& prov) {
  std::ostringstream out;
  out << header_lines(prov, table.base_seed);
  out << "\nResampling study, " << table.n_reps << " draws\n\n";
  out << "| estimator | estimand | RB % | MSE | RE vs IPW | failed |\n";
  out << "|---|---|---:|---:|---:|---:|\n";
  for (const auto& row : table.rows) {
    out << "| " << row.estimator << " | " << row.estimand << " | "
        << fixed2(row.rb_pct) << " | " << fixed3(row.mse) << " | "
        << (row.re_vs_ipw ? fixed2(*row.re_vs_ipw) : "") << " | "
        << row.failed_reps << " |\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << content;
}

}  // namespace gelcal
