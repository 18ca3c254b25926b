// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/inference.hpp"

#include <cmath>

namespace gelcal {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Acklam's rational approximation, then two Newton corrections against the
// erfc-based CDF.
double quantile_initial(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("normal_quantile: p must lie strictly inside (0,1)");
  }
  double x = quantile_initial(p);
  for (int i = 0; i < 2; ++i) {
    const double err = normal_cdf(x) - p;
    const double dens = normal_pdf(x);
    if (dens <= 0.0) break;
    x -= err / dens;
  }
  return x;
}

std::pair<double, double> wald_ci(double value, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("wald_ci: level must lie strictly inside (0,1)");
  }
  if (se < 0.0) throw InvariantViolation("wald_ci: negative standard error");
  if (se == 0.0) return {value, value};
  const double z = normal_quantile(0.5 * (1.0 + level));
  return {value - z * se, value + z * se};
}

VariancePlugin plugin_variance(const ObservedSample& sample,
                               const PropensityFit& propensity,
                               const BestLinearPredictorFit& blp,
                               double cal_estimate) {
  const Eigen::Index n = sample.n;
  const Eigen::Index p = propensity.beta.size();
  if (blp.m_hat.size() != n || propensity.pi.size() != n) {
    throw InvariantViolation("plugin_variance: inputs must cover all units");
  }

  VariancePlugin out;
  out.a2_hat = Vector::Zero(p);
  out.s_hat = Matrix::Zero(p, p);
  const double inv_n = 1.0 / static_cast<double>(n);

  bool extreme = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = propensity.pi[i];
    if (pi < 1e-6 || pi > 1.0 - 1e-6) extreme = true;
    const Vector dpi = propensity.dpi_dbeta(i);
    out.s_hat.noalias() += inv_n / (pi * (1.0 - pi)) * dpi * dpi.transpose();
    if (sample.r[i]) {
      out.a2_hat.noalias() +=
          inv_n / (pi * pi) * dpi * (sample.y[i] - blp.m_hat[i]);
    }
  }
  if (extreme) {
    out.warnings.push_back(
        "ExtremePropensity: fitted probabilities within 1e-6 of 0/1 make the "
        "(1-pi)^{-1} adjustment unstable");
  }

  Vector s_inv_a2;
  try {
    s_inv_a2 = solve_spd(out.s_hat, out.a2_hat);
  } catch (const NotPositiveDefinite&) {
    throw NotPositiveDefinite(
        "plugin_variance: S is singular (constant propensity or collinear features)");
  }

  out.m_tilde_hat.resize(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = propensity.pi[i];
    const Vector dpi = propensity.dpi_dbeta(i);
    out.m_tilde_hat[i] = blp.m_hat[i] - s_inv_a2.dot(dpi) / (1.0 - pi);
    double bracket = out.m_tilde_hat[i] - cal_estimate;
    if (sample.r[i]) {
      bracket += (sample.y[i] - out.m_tilde_hat[i]) / pi;
    }
    total += bracket * bracket;
  }
  out.variance = total * inv_n * inv_n;
  out.se = std::sqrt(out.variance);
  return out;
}

}  // namespace gelcal
