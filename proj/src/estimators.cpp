// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/estimators.hpp"

#include <cmath>
#include <sstream>

namespace gelcal {

EstimandSpec EstimandSpec::mean() {
  EstimandSpec spec;
  spec.kind = Kind::Mean;
  return spec;
}

EstimandSpec EstimandSpec::tail_probability(double c) {
  EstimandSpec spec;
  spec.kind = Kind::TailProbability;
  spec.c = c;
  return spec;
}

EstimandSpec EstimandSpec::functional_grid(std::function<double(double)> h,
                                           std::vector<double> cutpoints) {
  EstimandSpec spec;
  spec.kind = Kind::FunctionalGrid;
  spec.h = std::move(h);
  spec.cutpoints = std::move(cutpoints);
  return spec;
}

double EstimandSpec::apply(double y) const {
  switch (kind) {
    case Kind::Mean: return y;
    case Kind::TailProbability: return y > c ? 1.0 : 0.0;
    case Kind::FunctionalGrid:
      throw InvariantViolation("FunctionalGrid estimands go through functional_grid_approx");
  }
  return 0.0;
}

std::string EstimandSpec::label() const {
  switch (kind) {
    case Kind::Mean: return "mean";
    case Kind::TailProbability: {
      std::ostringstream s;
      s << "tail:" << c;
      return s.str();
    }
    case Kind::FunctionalGrid: return "grid";
  }
  return "?";
}

Estimate estimate_ipw(const ObservedSample& sample, const PropensityFit& propensity,
                      bool hajek) {
  double total = 0.0;
  double weight_total = 0.0;
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    const double w = 1.0 / propensity.pi[i];
    total += w * sample.y[i];
    weight_total += w;
  }
  Estimate est;
  est.method = hajek ? "ipw_hajek" : "ipw";
  est.value = hajek ? total / weight_total : total / static_cast<double>(sample.n);
  est.n_complete = sample.n_complete();
  return est;
}

Estimate estimate_aipw(const ObservedSample& sample, const PropensityFit& propensity,
                       const Vector& m_hat) {
  if (m_hat.size() != sample.n) {
    throw InvariantViolation("estimate_aipw: m_hat must cover all units");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    const double pi = propensity.pi[i];
    if (sample.r[i]) {
      total += sample.y[i] / pi - (1.0 - pi) / pi * m_hat[i];
    } else {
      total += m_hat[i];
    }
  }
  Estimate est;
  est.method = "aipw";
  est.value = total / static_cast<double>(sample.n);
  est.n_complete = sample.n_complete();
  return est;
}

Estimate estimate_ols(const ObservedSample& sample, const Vector& m_hat) {
  if (m_hat.size() != sample.n) {
    throw InvariantViolation("estimate_ols: m_hat must cover all units");
  }
  Estimate est;
  est.method = "ols";
  est.value = m_hat.mean();
  est.n_complete = sample.n_complete();
  return est;
}

Estimate estimate_cal(const ObservedSample& sample, const CalibrationResult& calibration) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (sample.r[i]) total += calibration.weights[i] * sample.y[i];
  }
  Estimate est;
  est.method = "cal";
  est.value = total;
  est.n_complete = sample.n_complete();
  return est;
}

std::vector<Estimate> multipurpose_estimate(const ObservedSample& sample,
                                            const CalibrationResult& calibration,
                                            const std::vector<EstimandSpec>& estimands) {
  std::vector<Estimate> out;
  out.reserve(estimands.size());
  for (const auto& estimand : estimands) {
    if (estimand.kind == EstimandSpec::Kind::FunctionalGrid) {
      out.push_back(functional_grid_approx(sample, calibration, estimand.h,
                                           estimand.cutpoints));
      out.back().method = "cal[" + estimand.label() + "]";
      continue;
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < sample.n; ++i) {
      if (sample.r[i]) total += calibration.weights[i] * estimand.apply(sample.y[i]);
    }
    Estimate est;
    est.method = "cal[" + estimand.label() + "]";
    est.value = total;
    est.n_complete = sample.n_complete();
    out.push_back(std::move(est));
  }
  return out;
}

Estimate functional_grid_approx(const ObservedSample& sample,
                                const CalibrationResult& calibration,
                                const std::function<double(double)>& h,
                                const std::vector<double>& cutpoints) {
  if (cutpoints.empty()) {
    throw InvariantViolation("functional_grid_approx: at least one cutpoint required");
  }
  for (std::size_t m = 1; m < cutpoints.size(); ++m) {
    if (!(cutpoints[m] > cutpoints[m - 1])) {
      throw InvariantViolation("functional_grid_approx: cutpoints must be strictly increasing");
    }
  }
  const std::size_t m_count = cutpoints.size() + 1;  // with t_0=-inf, t_{M+1}=+inf
  std::vector<double> mass(m_count, 0.0);
  for (Eigen::Index i = 0; i < sample.n; ++i) {
    if (!sample.r[i]) continue;
    const double y = sample.y[i];
    std::size_t slot =
        std::upper_bound(cutpoints.begin(), cutpoints.end(), y) - cutpoints.begin();
    // interval m holds t_m < y <= t_{m+1}; upper_bound uses <, so move a
    // point sitting exactly on a cutpoint into the interval it closes
    if (slot > 0 && y == cutpoints[slot - 1]) slot -= 1;
    mass[slot] += calibration.weights[i];
  }

  Estimate est;
  est.method = "cal[grid]";
  est.n_complete = sample.n_complete();
  double value = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    double point;
    if (m == 0) {
      point = cutpoints.front();
    } else if (m == m_count - 1) {
      point = cutpoints.back();
    } else {
      point = 0.5 * (cutpoints[m - 1] + cutpoints[m]);
    }
    if (mass[m] == 0.0) {
      std::ostringstream note;
      note << "EmptyInterval: no weighted mass in interval " << m;
      est.notes.push_back(note.str());
    }
    value += h(point) * mass[m];
  }
  est.value = value;
  return est;
}

std::vector<Estimate> solve_estimating_equation(const ObservedSample& sample,
                                                const CalibrationResult& calibration,
                                                const EstimatingFunction& g,
                                                const Vector& theta0,
                                                int max_iter, double tol) {
  if (!g.g || !g.jacobian || g.dim <= 0) {
    throw InvariantViolation("solve_estimating_equation: g, jacobian and dim required");
  }
  if (theta0.size() != g.dim) {
    throw InvariantViolation("solve_estimating_equation: start has wrong dimension");
  }

  auto weighted_g = [&](const Vector& theta) {
    Vector total = Vector::Zero(g.dim);
    for (Eigen::Index i = 0; i < sample.n; ++i) {
      if (!sample.r[i]) continue;
      total += calibration.weights[i] *
               g.g(sample.y[i], sample.x.row(i).transpose(), theta);
    }
    return total;
  };
  auto weighted_jacobian = [&](const Vector& theta) {
    Matrix total = Matrix::Zero(g.dim, g.dim);
    for (Eigen::Index i = 0; i < sample.n; ++i) {
      if (!sample.r[i]) continue;
      total += calibration.weights[i] *
               g.jacobian(sample.y[i], sample.x.row(i).transpose(), theta);
    }
    return total;
  };

  Vector theta = theta0;
  Vector gval = weighted_g(theta);
  bool converged = gval.norm() <= tol;
  for (int iter = 0; iter < max_iter && !converged; ++iter) {
    const Matrix jac = weighted_jacobian(theta);
    Eigen::PartialPivLU<Matrix> lu(jac);
    const double pivot_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(pivot_min > 1e-14 * std::max(1.0, jac.cwiseAbs().maxCoeff()))) {
      throw SingularJacobian("solve_estimating_equation: Jacobian is singular");
    }
    const Vector step = lu.solve(-gval);

    // halve the step until the residual norm does not increase
    double scale = 1.0;
    const double base_norm = gval.norm();
    while (scale >= 1e-12) {
      const Vector trial = theta + scale * step;
      const Vector gt = weighted_g(trial);
      if (gt.norm() <= base_norm || scale <= 1e-12) {
        theta = trial;
        gval = gt;
        break;
      }
      scale *= 0.5;
    }
    converged = gval.norm() <= tol;
  }
  if (!converged) {
    throw MaxIterations("solve_estimating_equation: no root within iteration limit");
  }

  std::vector<Estimate> out;
  for (Eigen::Index j = 0; j < g.dim; ++j) {
    Estimate est;
    est.method = "cal_estimating_eq[" + std::to_string(j) + "]";
    est.value = theta[j];
    est.n_complete = sample.n_complete();
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace gelcal
