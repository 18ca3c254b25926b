// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/calibration.hpp"

#include <cmath>
#include <sstream>

namespace gelcal {

namespace {

struct SolvePrep {
  std::vector<Eigen::Index> cc;   // complete-case rows of the sample
  Vector w;                       // base weights at cc
  Matrix z;                       // standardized solver coordinates, one row
                                  // per objective term
  std::vector<int> kept;          // original column index per solver column
  std::vector<int> dropped;       // columns with (numerically) zero spread
  Vector scales;                  // per kept column
};

std::vector<Eigen::Index> complete_rows(const std::vector<std::uint8_t>& r) {
  std::vector<Eigen::Index> cc;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i]) cc.push_back(static_cast<Eigen::Index>(i));
  }
  return cc;
}

// Standardizes the columns of `raw`: columns whose entries are all
// numerically zero are dropped (their lambda coordinate is unidentified and
// their moment holds through the weight normalization); the rest are scaled
// to unit root-mean-square.
SolvePrep standardize(const Matrix& raw, std::vector<Eigen::Index> cc, Vector w,
                      const Vector& col_reference) {
  SolvePrep prep;
  prep.cc = std::move(cc);
  prep.w = std::move(w);
  const Eigen::Index rows = raw.rows();
  const Eigen::Index q = raw.cols();

  std::vector<double> scales;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double ref = std::max(1.0, std::abs(col_reference[j]));
    const double spread = raw.col(j).cwiseAbs().maxCoeff();
    if (spread <= 1e-10 * ref) {
      prep.dropped.push_back(static_cast<int>(j));
      continue;
    }
    double rms = std::sqrt(raw.col(j).squaredNorm() / static_cast<double>(rows));
    if (rms <= 0.0) rms = spread;
    prep.kept.push_back(static_cast<int>(j));
    scales.push_back(rms);
  }

  prep.scales = Eigen::Map<Vector>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  prep.z.resize(rows, static_cast<Eigen::Index>(prep.kept.size()));
  for (std::size_t k = 0; k < prep.kept.size(); ++k) {
    prep.z.col(static_cast<Eigen::Index>(k)) = raw.col(prep.kept[k]) / prep.scales[k];
  }
  return prep;
}

void require_spd_gram(const Matrix& z) {
  if (z.cols() == 0) return;
  Eigen::LLT<Matrix> llt(Matrix(z.transpose() * z));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("calibration: centered Gram matrix of u is singular "
                              "(collinear calibration functions)");
  }
}

// The moment residual relates to the dual gradient through
// residual_k = g_k s_k / den with |den| of the order of `mass`; a gradient
// tolerance of residual_tol * mass / max_scale (with a safety factor for
// the den ~ mass approximation) attains the residual contract on any
// problem scale.
double scaled_gradient_tol(double residual_tol, double mass, const Vector& scales) {
  const double max_scale = scales.size() > 0 ? scales.maxCoeff() : 1.0;
  return 0.01 * residual_tol * std::max(mass, 1.0) / std::max(max_scale, 1.0);
}

Vector expand_lambda(const SolvePrep& prep, const Vector& lambda_std, Eigen::Index q) {
  Vector lambda = Vector::Zero(q);
  for (std::size_t k = 0; k < prep.kept.size(); ++k) {
    lambda[prep.kept[k]] = lambda_std[static_cast<Eigen::Index>(k)] / prep.scales[k];
  }
  return lambda;
}

// Assembles weights, residual and convergence bookkeeping shared by the
// three solvers.  `den` is the normalizing sum; p_i = w_i rho'(v_i) / den.
CalibrationResult finish(const CalibrationProblem& problem, const SolvePrep& prep,
                         const Vector& lambda_std, const Vector& v,
                         NewtonReport newton, bool restricted, double den,
                         const CalibrationOptions& opts, const char* where) {
  const Eigen::Index n = problem.u.rows();
  const Eigen::Index q = problem.u.cols();

  CalibrationResult result;
  result.lambda_hat = expand_lambda(prep, lambda_std, q);
  result.newton = std::move(newton);
  result.restricted = restricted;
  result.dropped_columns = prep.dropped;

  result.weights = Vector::Zero(n);
  for (std::size_t k = 0; k < prep.cc.size(); ++k) {
    const double rho1 = problem.rho.eval(v[static_cast<Eigen::Index>(k)], 1);
    result.weights[prep.cc[k]] =
        problem.base_weights[prep.cc[k]] * rho1 / den;
  }
  result.weight_sum = result.weights.sum();

  result.moment_residual = problem.u_bar;
  for (std::size_t k = 0; k < prep.cc.size(); ++k) {
    result.moment_residual.noalias() -=
        result.weights[prep.cc[k]] * problem.u.row(prep.cc[k]).transpose();
  }

  const double resid = result.moment_residual.cwiseAbs().maxCoeff();
  if (!result.newton.converged || !(resid <= opts.residual_tol)) {
    std::ostringstream msg;
    msg << where << ": moment conditions not attained (max residual " << resid
        << " after " << result.newton.iterations
        << " iterations); the full-sample means may lie outside the "
           "complete-case hull";
    throw InfeasibleCalibration(msg.str());
  }
  return result;
}

}  // namespace

FeasibilityBox FeasibilityBox::adapted_to(const RhoFunction& rho) {
  // region around zero where rho' keeps its sign and v stays in the domain
  double lo = rho.domain().lo;
  double hi = rho.domain().hi;
  if (rho.kind() == RhoKind::Quadratic) lo = -1.0;  // rho' vanishes at -1
  if (rho.kind() == RhoKind::Custom) {
    lo = std::max(lo, -1.0);
    hi = std::min(hi, 1.0);
  }
  constexpr double kWide = 1e6;
  FeasibilityBox box;
  box.v_lo = std::isinf(lo) ? -kWide : 0.9 * lo;
  box.v_hi = std::isinf(hi) ? kWide : 0.9 * hi;
  return box;
}

void CalibrationProblem::validate() const {
  const Eigen::Index n = u.rows();
  if (static_cast<Eigen::Index>(r.size()) != n || base_weights.size() != n) {
    throw InvariantViolation("CalibrationProblem: field lengths do not conform");
  }
  if (u_bar.size() != u.cols()) {
    throw InvariantViolation("CalibrationProblem: u_bar length mismatch");
  }
  const Vector means = u.colwise().mean();
  const double scale = std::max(1.0, u_bar.cwiseAbs().maxCoeff());
  if ((means - u_bar).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvariantViolation("CalibrationProblem: u_bar is not the column mean of u");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r[i] && !(base_weights[i] > 0.0)) {
      throw InvariantViolation("CalibrationProblem: base weights must be positive");
    }
  }
}

CalibrationProblem make_calibration_problem(const ObservedSample& sample,
                                            const Matrix& u,
                                            const PropensityFit& propensity,
                                            const RhoFunction& rho) {
  if (u.rows() != sample.n) {
    throw InvariantViolation("make_calibration_problem: u row count mismatch");
  }
  CalibrationProblem problem;
  problem.u = u;
  problem.u_bar = u.colwise().mean();
  problem.r = sample.r;
  problem.base_weights = propensity.pi.cwiseInverse();
  problem.rho = rho;
  return problem;
}

CalibrationResult solve_lambda(const CalibrationProblem& problem,
                               const std::optional<FeasibilityBox>& box_arg,
                               const CalibrationOptions& opts) {
  problem.validate();
  std::optional<FeasibilityBox> box = box_arg;
  if (box && box->adaptive()) box = FeasibilityBox::adapted_to(problem.rho);
  const auto cc = complete_rows(problem.r);
  const Eigen::Index q = problem.u.cols();
  if (static_cast<Eigen::Index>(cc.size()) < q + 1) {
    throw TooFewCompleteCases("solve_lambda: need at least q+1 complete cases");
  }

  const Eigen::Index nc = static_cast<Eigen::Index>(cc.size());
  Matrix centered(nc, q);
  Vector w(nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    centered.row(k) = problem.u.row(cc[k]) - problem.u_bar.transpose();
    w[k] = problem.base_weights[cc[k]];
  }
  SolvePrep prep = standardize(centered, cc, w, problem.u_bar);
  require_spd_gram(prep.z);
  const Eigen::Index k = prep.z.cols();
  const RhoFunction& rho = problem.rho;

  NewtonReport report;
  Vector v_hat;
  long box_rejections = 0;
  if (k == 0) {
    report.argmax = Vector::Zero(0);
    report.converged = true;
    v_hat = Vector::Zero(nc);
  } else {
    auto feasible = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!rho.domain().contains(v[i])) return false;
        if (box && (v[i] <= box->v_lo || v[i] >= box->v_hi)) {
          ++box_rejections;
          return false;
        }
      }
      return true;
    };

    ConcaveObjective objective;
    objective.value = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      double total = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!rho.domain().contains(v[i])) {
          return -std::numeric_limits<double>::infinity();
        }
        total += prep.w[i] * rho.eval(v[i], 0);
      }
      return total;
    };
    objective.gradient = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      Vector g = Vector::Zero(k);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        g.noalias() += prep.w[i] * rho.eval(v[i], 1) * prep.z.row(i).transpose();
      }
      return g;
    };
    objective.hessian = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      Matrix h = Matrix::Zero(k, k);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        h.noalias() += prep.w[i] * rho.eval(v[i], 2) * prep.z.row(i).transpose() * prep.z.row(i);
      }
      return h;
    };

    NewtonOptions nopts;
    nopts.gradient_tol = std::min(
        opts.gradient_tol, scaled_gradient_tol(opts.residual_tol, w.sum(), prep.scales));
    nopts.max_iter = opts.max_iter;
    nopts.throw_on_stall = false;
    report = maximize_concave(objective, Vector::Zero(k), feasible, nopts);
    v_hat = prep.z * report.argmax;
  }

  const bool restricted = box.has_value() && box_rejections > 0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < nc; ++i) den += prep.w[i] * rho.eval(v_hat[i], 1);
  const Vector lambda_std = report.argmax;
  return finish(problem, prep, lambda_std, v_hat, std::move(report), restricted,
                den, opts, "solve_lambda");
}

CalibrationResult solve_lambda_quadratic_closed_form(const CalibrationProblem& problem,
                                                     const CalibrationOptions& opts) {
  problem.validate();
  if (problem.rho.kind() != RhoKind::Quadratic) {
    throw InvariantViolation("solve_lambda_quadratic_closed_form: rho must be quadratic");
  }
  const auto cc = complete_rows(problem.r);
  const Eigen::Index q = problem.u.cols();
  if (static_cast<Eigen::Index>(cc.size()) < q + 1) {
    throw TooFewCompleteCases("solve_lambda_quadratic_closed_form: need at least q+1 complete cases");
  }

  const Eigen::Index nc = static_cast<Eigen::Index>(cc.size());
  Matrix centered(nc, q);
  Vector w(nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    centered.row(k) = problem.u.row(cc[k]) - problem.u_bar.transpose();
    w[k] = problem.base_weights[cc[k]];
  }
  SolvePrep prep = standardize(centered, cc, w, problem.u_bar);
  const Eigen::Index k = prep.z.cols();

  Vector lambda_std = Vector::Zero(k);
  if (k > 0) {
    Matrix gram = Matrix::Zero(k, k);
    Vector s = Vector::Zero(k);
    for (Eigen::Index i = 0; i < nc; ++i) {
      const Vector zi = prep.z.row(i).transpose();
      gram.noalias() += prep.w[i] * zi * zi.transpose();
      s.noalias() += prep.w[i] * zi;
    }
    lambda_std = -solve_spd(gram, s);
  }

  const Vector v_hat = prep.z * lambda_std;
  NewtonReport report;
  report.argmax = lambda_std;
  report.converged = true;
  report.iterations = 0;

  double den = 0.0;
  for (Eigen::Index i = 0; i < nc; ++i) {
    den += prep.w[i] * problem.rho.eval(v_hat[i], 1);
  }
  return finish(problem, prep, lambda_std, v_hat, std::move(report), false, den,
                opts, "solve_lambda_quadratic_closed_form");
}

CalibrationResult solve_centered(const CalibrationProblem& problem,
                                 const CalibrationOptions& opts) {
  problem.validate();
  const Eigen::Index q = problem.u.cols();

  bool has_constant = false;
  for (Eigen::Index j = 0; j < q && !has_constant; ++j) {
    const double lo = problem.u.col(j).minCoeff();
    const double hi = problem.u.col(j).maxCoeff();
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)) && std::abs(hi) > 0.0) {
      has_constant = true;
    }
  }
  if (!has_constant) {
    throw MissingConstantColumn("solve_centered: u must contain a constant column");
  }

  const auto cc = complete_rows(problem.r);
  const Eigen::Index n = problem.u.rows();
  const Eigen::Index nc = static_cast<Eigen::Index>(cc.size());
  if (nc < q + 1) {
    throw TooFewCompleteCases("solve_centered: need at least q+1 complete cases");
  }

  // centered moment vectors g_i = r_i pi^{-1} u(x_i) - u_bar for every unit;
  // the incomplete units all contribute -u_bar, and their presence is what
  // lets the constant-column coordinate of the gradient vanish
  Matrix moments(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (problem.r[static_cast<std::size_t>(i)]) {
      moments.row(i) =
          problem.base_weights[i] * problem.u.row(i) - problem.u_bar.transpose();
    } else {
      moments.row(i) = -problem.u_bar.transpose();
    }
  }

  Vector w(nc);
  for (Eigen::Index k = 0; k < nc; ++k) w[k] = problem.base_weights[cc[k]];
  SolvePrep prep = standardize(moments, cc, w, problem.u_bar);
  require_spd_gram(prep.z);
  const Eigen::Index k = prep.z.cols();
  const RhoFunction& rho = problem.rho;

  NewtonReport report;
  Vector v_all;
  if (k == 0) {
    report.argmax = Vector::Zero(0);
    report.converged = true;
    v_all = Vector::Zero(n);
  } else {
    auto feasible = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!rho.domain().contains(v[i])) return false;
      }
      return true;
    };
    ConcaveObjective objective;
    objective.value = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      double total = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!rho.domain().contains(v[i])) {
          return -std::numeric_limits<double>::infinity();
        }
        total += rho.eval(v[i], 0);
      }
      return total;
    };
    objective.gradient = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      Vector g = Vector::Zero(k);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        g.noalias() += rho.eval(v[i], 1) * prep.z.row(i).transpose();
      }
      return g;
    };
    objective.hessian = [&](const Vector& lambda) {
      const Vector v = prep.z * lambda;
      Matrix h = Matrix::Zero(k, k);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        h.noalias() += rho.eval(v[i], 2) * prep.z.row(i).transpose() * prep.z.row(i);
      }
      return h;
    };

    NewtonOptions nopts;
    nopts.gradient_tol = std::min(
        opts.gradient_tol,
        scaled_gradient_tol(opts.residual_tol, static_cast<double>(n), prep.scales));
    nopts.max_iter = opts.max_iter;
    nopts.throw_on_stall = false;
    report = maximize_concave(objective, Vector::Zero(k), feasible, nopts);
    v_all = prep.z * report.argmax;
  }

  // the normalizing sum runs over every unit's rho'; the first-order
  // condition of the constant coordinate then pins sum r_i p*_i to one
  // rather than the weight construction itself
  double den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) den += rho.eval(v_all[i], 1);
  Vector v_complete(nc);
  for (Eigen::Index k2 = 0; k2 < nc; ++k2) v_complete[k2] = v_all[prep.cc[k2]];

  const Vector lambda_std = report.argmax;
  CalibrationResult result = finish(problem, prep, lambda_std, v_complete,
                                    std::move(report), false, den, opts,
                                    "solve_centered");
  if (std::abs(result.weight_sum - 1.0) > 1e-6) {
    std::ostringstream warn;
    warn << "centered weights sum to " << result.weight_sum << " (deviates from 1)";
    result.warnings.push_back(warn.str());
  }
  return result;
}

WeightDiagnostics weight_diagnostics(const CalibrationResult& result,
                                     const std::vector<std::uint8_t>& r) {
  WeightDiagnostics diag;
  double sum = 0.0, sum_sq = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r[i]) continue;
    const double p = result.weights[static_cast<Eigen::Index>(i)];
    if (first) {
      diag.min_weight = diag.max_weight = p;
      first = false;
    } else {
      diag.min_weight = std::min(diag.min_weight, p);
      diag.max_weight = std::max(diag.max_weight, p);
    }
    if (p < 0.0) ++diag.negative_count;
    sum += p;
    sum_sq += p * p;
  }
  diag.weight_sum = sum;
  diag.effective_sample_size = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  diag.max_moment_residual = result.moment_residual.size() > 0
                                 ? result.moment_residual.cwiseAbs().maxCoeff()
                                 : 0.0;
  return diag;
}

}  // namespace gelcal
