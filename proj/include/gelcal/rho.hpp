// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_RHO_HPP_
#define GELCAL_RHO_HPP_

#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "gelcal/errors.hpp"

namespace gelcal {

enum class RhoKind {
  Quadratic,
  EmpiricalLikelihood,
  ExponentialTilting,
  PowerDivergence,
  Custom,
};

/// Open interval of valid arguments for a rho function.
struct RhoDomain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v > lo && v < hi; }
};

/// Derivative callbacks for a user-supplied (raw) criterion function.
struct RawRho {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
  RhoDomain domain;
};

/// A concave, thrice differentiable criterion function in normalized form,
/// i.e. with first and second derivative equal to -1 at zero.
///
/// The closed family: quadratic -(1+v)^2/2 on R, empirical likelihood
/// log(1-v) on v<1, exponential tilting -exp(v) on R, and the power
/// divergence members -(1+theta*v)^((theta+1)/theta)/(theta+1) on
/// 1+theta*v>0.  Derivatives of the closed family are analytic.
class RhoFunction {
 public:
  static RhoFunction quadratic();
  static RhoFunction empirical_likelihood();
  static RhoFunction exponential_tilting();
  /// Cressie-Read member for theta outside {0,-1}; theta=1 coincides with
  /// the quadratic member.  Throws ThetaAtLimit at the EL/ET limits.
  static RhoFunction power_divergence(double theta);

  /// j-th derivative (j=0 is the function itself) of the normalized rho.
  /// Throws OutOfDomain when v is not strictly inside the domain.
  double eval(double v, int order) const;

  RhoKind kind() const { return kind_; }
  double theta() const { return theta_; }
  const RhoDomain& domain() const { return domain_; }
  /// Short display name, e.g. "el" or "cressie-read:0.667".
  std::string name() const;

  friend RhoFunction normalize(const RawRho& raw);

 private:
  RhoFunction(RhoKind kind, double theta, RhoDomain domain)
      : kind_(kind), theta_(theta), domain_(domain) {}

  RhoKind kind_;
  double theta_ = 0.0;
  RhoDomain domain_;
  std::shared_ptr<const RawRho> custom_;  // set for Custom only (pre-transformed)
};

/// Rescale an arbitrary raw rho so that its first and second derivatives at
/// zero are both -1.  The choice of criterion is unaffected by this
/// rescaling; it only fixes the parameterization.
/// Throws DegenerateRho when d1(0)=0 or d2(0)=0.
RhoFunction normalize(const RawRho& raw);

/// Parse a CLI name: "quadratic", "el", "et" or "cressie-read:<theta>".
RhoFunction parse_rho(const std::string& name);

}  // namespace gelcal

#endif  // GELCAL_RHO_HPP_
