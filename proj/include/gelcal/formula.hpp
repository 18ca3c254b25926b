// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_FORMULA_HPP_
#define GELCAL_FORMULA_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gelcal/data.hpp"

namespace gelcal {

enum class Transform { Identity, Square, Sqrt, Log };

enum class Comparison { Greater, GreaterEq, Less, LessEq };

/// One multiplicand of a term: a column with an optional transform.
struct FormulaFactor {
  std::string column;
  Transform transform = Transform::Identity;

  std::string label() const;
  bool operator==(const FormulaFactor&) const = default;
};

/// One right-hand-side term: a product of factors (a single factor is the
/// common case) or an indicator I(column cmp threshold).
struct FormulaTerm {
  std::vector<FormulaFactor> factors;
  // set for indicator terms, in which case factors stays empty
  std::optional<Comparison> cmp;
  std::string indicator_column;
  double threshold = 0.0;

  std::string label() const;
};

/// Parsed `response ~ term (+ term)*`.
///
/// The response is either a plain column name (including the nonmissing
/// indicator "r") or an indicator I(name cmp number).
struct FormulaSpec {
  std::string response;
  std::optional<Comparison> response_cmp;
  double response_threshold = 0.0;
  std::vector<FormulaTerm> terms;

  std::string text() const;  // canonical round-trippable form
};

/// Parses the formula grammar
///   formula := response "~" term ("+" term)*
///   term    := factor (":" factor)* | I(name cmp number)
///   factor  := name | fn "(" name ")"
///   fn      := sq | sqrt | log
/// Throws SyntaxError with the byte offset and the expected token set.
FormulaSpec parse_formula(const std::string& text);

/// Evaluates the right-hand side against a sample: an intercept column of
/// ones followed by one column per term, for all n units.
/// Throws UnknownColumn for unbound names and InvariantViolation when a
/// log/sqrt factor sees a non-positive value.
Matrix build_design(const ObservedSample& sample,
                    const std::vector<FormulaTerm>& terms);

/// Column labels matching build_design (intercept first).
std::vector<std::string> design_labels(const std::vector<FormulaTerm>& terms);

std::string to_string(Comparison cmp);

}  // namespace gelcal

#endif  // GELCAL_FORMULA_HPP_
