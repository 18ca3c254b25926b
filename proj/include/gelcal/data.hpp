// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_DATA_HPP_
#define GELCAL_DATA_HPP_

#include <string>
#include <vector>

#include "gelcal/numeric.hpp"

namespace gelcal {

/// A sample with a possibly missing response: (r_i, r_i*y_i, x_i).
///
/// y holds NaN exactly where r=0; covariates are fully observed and finite.
struct ObservedSample {
  Eigen::Index n = 0;
  Vector y;                              // NaN where r=0
  std::vector<std::uint8_t> r;           // nonmissing indicators
  Matrix x;                              // n x d covariates
  std::vector<std::string> column_names; // covariate labels, size d

  Eigen::Index n_complete() const;
  Eigen::Index column_index(const std::string& name) const;  // throws UnknownColumn
  /// Throws InvariantViolation when the (y,r) pairing or finiteness fails.
  void validate() const;
};

/// Fully observed data, used by the simulation harness as ground truth.
struct FullSample {
  Vector y;
  Matrix x;
  std::vector<std::string> column_names;

  /// Masks y according to r (1 keeps, 0 hides).
  ObservedSample mask(const std::vector<std::uint8_t>& r) const;
  /// The same data with every response observed.
  ObservedSample as_observed() const;
};

struct CsvOptions {
  std::string missing_token = "NA";
};

/// Reads a comma-delimited UTF-8 file with a mandatory header row.
/// A column named "y" is the response; an optional column "r" gives the
/// nonmissing indicator (derived from y's missingness when absent); all
/// remaining columns are numeric covariates.
ObservedSample load_csv(const std::string& path, const CsvOptions& opts = {});

void write_csv(const ObservedSample& sample, const std::string& path,
               const CsvOptions& opts = {});

/// Reads a fully observed sample (column "y" plus covariates, no missing
/// cells allowed).
FullSample load_full_csv(const std::string& path, const CsvOptions& opts = {});

}  // namespace gelcal

#endif  // GELCAL_DATA_HPP_
