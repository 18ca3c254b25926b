// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gelcal/numeric.hpp"
#include "gelcal/rng.hpp"

using namespace gelcal;

namespace {

Matrix random_spd(RngStream& rng, Eigen::Index n) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.next_normal();
  return m.transpose() * m + Matrix::Identity(n, n);
}

Vector random_vector(RngStream& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_normal();
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("numeric");

TEST_CASE("solve_spd identity and diagonal") {
  Vector b(2);
  b << 3, 4;
  Vector x = solve_spd(Matrix::Identity(2, 2), b);
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(4.0).epsilon(1e-14));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  Vector b2(2);
  b2 << 2, 8;
  Vector x2 = solve_spd(d, b2);
  CHECK(x2[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x2[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("solve_spd residual property on random systems") {
  RngStream rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_u64() % 8);
    const Matrix a = random_spd(rng, n);
    const Vector b = random_vector(rng, n);
    const Vector x = solve_spd(a, b);
    CHECK((a * x - b).norm() <= 1e-9 * b.norm());
  }
}

TEST_CASE("solve_spd rejects indefinite and asymmetric input") {
  Matrix neg = -Matrix::Identity(3, 3);
  CHECK_THROWS_AS(solve_spd(neg, Vector::Ones(3)), NotPositiveDefinite);

  Matrix asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(solve_spd(asym, Vector::Ones(2)), InvariantViolation);

  // rank-one matrix has a zero pivot
  Vector u(3);
  u << 1, 2, 3;
  Matrix rank1 = u * u.transpose();
  CHECK_THROWS_AS(solve_spd(rank1, Vector::Ones(3)), NotPositiveDefinite);
}

TEST_CASE("newton on a quadratic bowl converges in <= 2 iterations") {
  ConcaveObjective objective;
  objective.value = [](const Vector& v) { return -0.5 * v.squaredNorm(); };
  objective.gradient = [](const Vector& v) { return Vector(-v); };
  objective.hessian = [](const Vector& v) {
    return Matrix(-Matrix::Identity(v.size(), v.size()));
  };
  Vector start(2);
  start << 5, 5;
  NewtonOptions opts;
  opts.gradient_tol = 1e-10;
  const NewtonReport report = maximize_concave(objective, start, nullptr, opts);
  CHECK(report.converged);
  CHECK(report.iterations <= 2);
  CHECK(report.gradient_norm <= 1e-10);
  CHECK(report.argmax.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("newton stationary start returns immediately") {
  // log(1-v) + v on (-inf, 1) has its maximum at 0
  ConcaveObjective objective;
  objective.value = [](const Vector& v) { return std::log(1.0 - v[0]) + v[0]; };
  objective.gradient = [](const Vector& v) {
    Vector g(1);
    g[0] = -1.0 / (1.0 - v[0]) + 1.0;
    return g;
  };
  objective.hessian = [](const Vector& v) {
    Matrix h(1, 1);
    h(0, 0) = -1.0 / ((1.0 - v[0]) * (1.0 - v[0]));
    return h;
  };
  auto feasible = [](const Vector& v) { return v[0] < 1.0; };
  const NewtonReport report = maximize_concave(objective, Vector::Zero(1), feasible);
  CHECK(report.converged);
  CHECK(report.argmax[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.iterations == 0);
}

TEST_CASE("newton objective is non-decreasing across accepted iterations") {
  // skewed concave objective solved from far away
  Matrix a(2, 2);
  a << 4.0, 1.0, 1.0, 0.5;
  ConcaveObjective objective;
  objective.value = [&](const Vector& v) {
    return -0.5 * v.dot(a * v) - std::exp(v[0]) * 0.01;
  };
  objective.gradient = [&](const Vector& v) {
    Vector g = -(a * v);
    g[0] -= 0.01 * std::exp(v[0]);
    return g;
  };
  objective.hessian = [&](const Vector& v) {
    Matrix h = -a;
    h(0, 0) -= 0.01 * std::exp(v[0]);
    return h;
  };

  Vector start(2);
  start << 8, -9;
  double last = objective.value(start);
  bool monotone = true;
  ConcaveObjective watched = objective;
  watched.gradient = [&](const Vector& v) {
    const double now = objective.value(v);
    if (now < last - 1e-12) monotone = false;
    last = std::max(last, now);
    return objective.gradient(v);
  };
  const NewtonReport report = maximize_concave(watched, start);
  CHECK(report.converged);
  CHECK(monotone);
}

TEST_CASE("newton rejects infeasible trial iterates by halving") {
  // maximum of -(v-10)^2/2 subject to v < 1: the box rejection must keep
  // iterates strictly inside while the gradient pushes outward
  ConcaveObjective objective;
  objective.value = [](const Vector& v) { return -0.5 * (v[0] - 10.0) * (v[0] - 10.0); };
  objective.gradient = [](const Vector& v) {
    Vector g(1);
    g[0] = 10.0 - v[0];
    return g;
  };
  objective.hessian = [](const Vector&) {
    Matrix h(1, 1);
    h(0, 0) = -1.0;
    return h;
  };
  auto feasible = [](const Vector& v) { return v[0] < 1.0; };
  NewtonOptions opts;
  opts.throw_on_stall = false;
  const NewtonReport report = maximize_concave(objective, Vector::Zero(1), feasible, opts);
  CHECK_FALSE(report.converged);
  CHECK(report.argmax[0] < 1.0);
  CHECK(report.argmax[0] > 0.9);
}

TEST_CASE("newton line search stall throws when requested") {
  ConcaveObjective objective;
  objective.value = [](const Vector& v) { return -0.5 * (v[0] - 10.0) * (v[0] - 10.0); };
  objective.gradient = [](const Vector& v) {
    Vector g(1);
    g[0] = 10.0 - v[0];
    return g;
  };
  objective.hessian = [](const Vector&) {
    Matrix h(1, 1);
    h(0, 0) = -1.0;
    return h;
  };
  // only the start point is feasible
  auto feasible = [](const Vector& v) { return v[0] == 0.0; };
  CHECK_THROWS_AS(maximize_concave(objective, Vector::Zero(1), feasible),
                  LineSearchStalled);
}

TEST_CASE("newton infeasible start is rejected") {
  ConcaveObjective objective;
  objective.value = [](const Vector& v) { return -v.squaredNorm(); };
  objective.gradient = [](const Vector& v) { return Vector(-2.0 * v); };
  objective.hessian = [](const Vector& v) {
    return Matrix(-2.0 * Matrix::Identity(v.size(), v.size()));
  };
  auto feasible = [](const Vector& v) { return v[0] < 0.0; };
  CHECK_THROWS_AS(maximize_concave(objective, Vector::Zero(1), feasible),
                  InvariantViolation);
}

TEST_SUITE_END();
