# Copyright (c) 2026 The gelcal authors.
# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the python bindings."""

import math
import sys

import numpy as np

import gelcal


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def test_rho():
    q = gelcal.RhoFunction.quadratic()
    approx(q.eval(0.0, 1), -1.0)
    el = gelcal.parse_rho("el")
    approx(el.eval(0.5, 1), -2.0)
    try:
        el.eval(1.5, 0)
    except gelcal.GelcalError:
        pass
    else:
        raise AssertionError("expected GelcalError for out-of-domain eval")


def test_formula():
    text = gelcal.check_formula("I(y>240) ~ z1 + sqrt(z2):z3")
    assert "I(y>240)" in text and "sqrt(z2):z3" in text


def test_sample_and_estimate():
    rep = gelcal.generate_kang_schafer(n=4000, seed=7)
    sample = rep["observed"]
    assert sample.n == 4000
    assert 0 < sample.n_complete < 4000

    rows = gelcal.estimate(
        sample,
        estimators=["ipw", "cal", "cal2"],
        propensity="r ~ z1 + z2 + z3 + z4",
        working=["y ~ z1 + z2 + z3 + z4"],
        rho="el",
        estimands=["mean", "tail:240"],
    )
    rows += gelcal.estimate(
        sample,
        estimators=["aipw", "ols"],
        propensity="r ~ z1 + z2 + z3 + z4",
        working=["y ~ z1 + z2 + z3 + z4"],
    )
    by_key = {(r["method"], r["estimand"]): r for r in rows}
    assert abs(by_key[("aipw", "mean")]["value"] - 210.0) < 3.0
    cal_mean = by_key[("cal", "mean")]
    assert abs(cal_mean["value"] - 210.0) < 3.0
    assert cal_mean["se"] is not None
    assert cal_mean["ci_lo"] < cal_mean["value"] < cal_mean["ci_hi"]
    tail = by_key[("cal", "tail:240")]
    assert 0.1 < tail["value"] < 0.3
    cal2 = by_key[("cal2", "mean")]
    assert abs(cal2["value"] - cal_mean["value"]) < 2.0


def test_weights():
    rep = gelcal.generate_kang_schafer(n=2000, seed=13)
    out = gelcal.calibration_weights(
        rep["observed"],
        propensity="r ~ z1 + z2 + z3 + z4",
        working=["y ~ z1 + z2 + z3 + z4"],
        rho="et",
        box=False,
    )
    w = np.asarray(out["weights"])
    r = np.asarray(rep["r"])
    approx(w[r == 1].sum(), 1.0, 1e-9)
    assert w[r == 0].max() == 0.0
    assert out["min_weight"] >= 0.0
    assert np.abs(np.asarray(out["moment_residual"])).max() <= 1e-8


def test_sample_from_numpy():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(200, 2))
    y = 1.0 + x[:, 0] + rng.normal(size=200)
    y[rng.random(200) < 0.3] = np.nan
    sample = gelcal.Sample(y=y, x=x, columns=["a", "b"])
    rows = gelcal.estimate(
        sample,
        estimators=["cal"],
        propensity="r ~ a + b",
        working=["y ~ a + b"],
    )
    assert abs(rows[0]["value"] - 1.0) < 0.5


def test_large_replicate_consistency():
    # one large replicate with correct models: the calibration estimate
    # sits within 0.5 of the scenario mean 210
    rep = gelcal.generate_kang_schafer(n=100000, seed=11)
    rows = gelcal.estimate(
        rep["observed"],
        estimators=["cal"],
        propensity="r ~ z1 + z2 + z3 + z4",
        working=["y ~ z1 + z2 + z3 + z4"],
        se=False,
    )
    assert abs(rows[0]["value"] - 210.0) < 0.5


def test_mc_table():
    rows = gelcal.run_table(4, n=150, reps=8, seed=3, parallelism=2)
    assert len(rows) == 24  # 3 rho x 2 missingness x 4 cases
    assert all(r["failed_reps"] == 0 for r in rows)


def test_inference_helpers():
    approx(gelcal.normal_quantile(0.975), 1.959963984540054, 1e-9)
    lo, hi = gelcal.wald_ci(1.0, 0.5, 0.95)
    approx(lo, 1.0 - 0.5 * 1.959963984540054, 1e-9)
    approx(hi, 1.0 + 0.5 * 1.959963984540054, 1e-9)


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok: {test.__name__}")
    print(f"{len(tests)} python smoke tests passed (gelcal {gelcal.__version__})")


if __name__ == "__main__":
    sys.exit(main())
