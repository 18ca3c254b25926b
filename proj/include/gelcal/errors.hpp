// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_ERRORS_HPP_
#define GELCAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gelcal {

// Exit-code categories used by the CLI: 1 usage/config, 2 numerical, 3 data.
enum class ErrorCategory { Usage = 1, Numerical = 2, Data = 3 };

class Error : public std::runtime_error {
 public:
  Error(std::string type, const std::string& msg, ErrorCategory cat)
      : std::runtime_error(msg), type_(std::move(type)), category_(cat) {}
  const std::string& type() const { return type_; }
  ErrorCategory category() const { return category_; }

 private:
  std::string type_;
  ErrorCategory category_;
};

#define GELCAL_DEFINE_ERROR(NAME, CATEGORY)                          \
  class NAME : public Error {                                        \
   public:                                                           \
    explicit NAME(const std::string& msg)                            \
        : Error(#NAME, msg, ErrorCategory::CATEGORY) {}              \
  }

GELCAL_DEFINE_ERROR(NotPositiveDefinite, Numerical);
GELCAL_DEFINE_ERROR(LineSearchStalled, Numerical);
GELCAL_DEFINE_ERROR(MaxIterations, Numerical);
GELCAL_DEFINE_ERROR(OutOfDomain, Numerical);
GELCAL_DEFINE_ERROR(DegenerateRho, Usage);
GELCAL_DEFINE_ERROR(ThetaAtLimit, Usage);
GELCAL_DEFINE_ERROR(ParseError, Data);
GELCAL_DEFINE_ERROR(InvariantViolation, Data);
GELCAL_DEFINE_ERROR(Separation, Numerical);
GELCAL_DEFINE_ERROR(RankDeficient, Numerical);
GELCAL_DEFINE_ERROR(TooFewCompleteCases, Data);
GELCAL_DEFINE_ERROR(InfeasibleCalibration, Numerical);
GELCAL_DEFINE_ERROR(MissingConstantColumn, Usage);
GELCAL_DEFINE_ERROR(SingularJacobian, Numerical);
GELCAL_DEFINE_ERROR(SyntaxError, Usage);
GELCAL_DEFINE_ERROR(UnknownColumn, Usage);
GELCAL_DEFINE_ERROR(ConfigError, Usage);

#undef GELCAL_DEFINE_ERROR

}  // namespace gelcal

#endif  // GELCAL_ERRORS_HPP_
