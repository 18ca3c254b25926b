// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gelcal {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t row, std::size_t col) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != field.size()) {
    std::ostringstream msg;
    msg << "unparseable number '" << field << "' at row " << row << ", column "
        << (col + 1);
    throw ParseError(msg.str());
  }
  return v;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Eigen::Index ObservedSample::n_complete() const {
  Eigen::Index c = 0;
  for (auto ri : r) c += (ri != 0);
  return c;
}

Eigen::Index ObservedSample::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    if (column_names[j] == name) return static_cast<Eigen::Index>(j);
  }
  throw UnknownColumn("no covariate column named '" + name + "'");
}

void ObservedSample::validate() const {
  if (y.size() != n || static_cast<Eigen::Index>(r.size()) != n || x.rows() != n) {
    throw InvariantViolation("sample field lengths do not conform");
  }
  if (static_cast<std::size_t>(x.cols()) != column_names.size()) {
    throw InvariantViolation("covariate labels do not match columns");
  }
  Eigen::Index complete = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool have_y = std::isfinite(y[i]);
    if (r[i] != 0 && r[i] != 1) {
      throw InvariantViolation("r entries must be 0 or 1");
    }
    if (r[i] == 1 && !have_y) {
      throw InvariantViolation("y missing where r=1 at row " + std::to_string(i + 1));
    }
    if (r[i] == 0 && have_y) {
      throw InvariantViolation("y present where r=0 at row " + std::to_string(i + 1));
    }
    complete += r[i];
  }
  if (complete == 0) throw InvariantViolation("no complete cases");
  if (!x.allFinite()) throw InvariantViolation("covariates contain non-finite entries");
}

ObservedSample FullSample::mask(const std::vector<std::uint8_t>& r) const {
  if (static_cast<Eigen::Index>(r.size()) != y.size()) {
    throw InvariantViolation("mask length does not match sample size");
  }
  ObservedSample s;
  s.n = y.size();
  s.y = y;
  s.r = r;
  s.x = x;
  s.column_names = column_names;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (r[i] == 0) s.y[i] = std::numeric_limits<double>::quiet_NaN();
  }
  s.validate();
  return s;
}

ObservedSample FullSample::as_observed() const {
  return mask(std::vector<std::uint8_t>(static_cast<std::size_t>(y.size()), 1));
}

ObservedSample load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'");
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = strip(h);

  Eigen::Index y_col = -1, r_col = -1;
  std::vector<Eigen::Index> x_cols;
  std::vector<std::string> x_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "y") {
      y_col = static_cast<Eigen::Index>(j);
    } else if (header[j] == "r") {
      r_col = static_cast<Eigen::Index>(j);
    } else {
      if (header[j].empty()) {
        throw ParseError("empty header name in column " + std::to_string(j + 1));
      }
      x_cols.push_back(static_cast<Eigen::Index>(j));
      x_names.push_back(header[j]);
    }
  }
  if (y_col < 0) throw ParseError("header has no 'y' column");

  std::vector<double> ys;
  std::vector<std::uint8_t> rs;
  std::vector<double> xs;  // row-major
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row << " has " << fields.size() << " fields, expected "
          << header.size();
      throw ParseError(msg.str());
    }
    for (auto& f : fields) f = strip(f);

    const std::string& yf = fields[static_cast<std::size_t>(y_col)];
    const bool y_missing = yf.empty() || yf == opts.missing_token;
    double yv = std::numeric_limits<double>::quiet_NaN();
    if (!y_missing) yv = parse_number(yf, row, static_cast<std::size_t>(y_col));

    std::uint8_t rv;
    if (r_col >= 0) {
      const double raw = parse_number(fields[static_cast<std::size_t>(r_col)],
                                      row, static_cast<std::size_t>(r_col));
      if (raw != 0.0 && raw != 1.0) {
        throw ParseError("r entry must be 0 or 1 at row " + std::to_string(row));
      }
      rv = static_cast<std::uint8_t>(raw);
    } else {
      rv = y_missing ? 0 : 1;
    }

    ys.push_back(yv);
    rs.push_back(rv);
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      const std::size_t j = static_cast<std::size_t>(x_cols[k]);
      if (fields[j].empty() || fields[j] == opts.missing_token) {
        throw ParseError("missing covariate value at row " + std::to_string(row) +
                         ", column " + std::to_string(j + 1));
      }
      xs.push_back(parse_number(fields[j], row, j));
    }
  }

  ObservedSample s;
  s.n = static_cast<Eigen::Index>(ys.size());
  s.y = Eigen::Map<Vector>(ys.data(), s.n);
  s.r = std::move(rs);
  s.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>(
      xs.data(), s.n, static_cast<Eigen::Index>(x_names.size()));
  s.column_names = std::move(x_names);
  s.validate();
  return s;
}

void write_csv(const ObservedSample& sample, const std::string& path,
               const CsvOptions& opts) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "y,r";
  for (const auto& name : sample.column_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (sample.r[i]) {
      out << format_value(sample.y[i]);
    } else {
      out << opts.missing_token;
    }
    out << ',' << int(sample.r[i]);
    for (Eigen::Index j = 0; j < sample.x.cols(); ++j) {
      out << ',' << format_value(sample.x(i, j));
    }
    out << '\n';
  }
}

FullSample load_full_csv(const std::string& path, const CsvOptions& opts) {
  ObservedSample s = load_csv(path, opts);
  if (s.n_complete() != s.n) {
    throw InvariantViolation("full sample has missing responses in '" + path + "'");
  }
  FullSample f;
  f.y = s.y;
  f.x = s.x;
  f.column_names = s.column_names;
  return f;
}

}  // namespace gelcal
