# Copyright (c) 2026 The gelcal authors.
# SPDX-License-Identifier: Apache-2.0

"""Generalized empirical likelihood calibration estimation for missing-response data."""

from _gelcal import (
    solve_estimating_equation,
    GelcalError,
    RhoFunction,
    Sample as _SampleType,
    make_sample,
    calibration_weights,
    check_formula,
    estimate,
    fit_propensity,
    generate_kang_schafer,
    load_csv,
    normal_quantile,
    parse_rho,
    run_table,
    wald_ci,
    __version__,
)

def Sample(y, x, r=None, columns=()):
    """Build a sample from arrays: y (NaN = missing), covariates x, optional
    0/1 indicators r and column names."""
    return make_sample(y, x, r, list(columns))


__all__ = [
    "solve_estimating_equation",
    "GelcalError",
    "RhoFunction",
    "Sample",
    "calibration_weights",
    "check_formula",
    "estimate",
    "fit_propensity",
    "generate_kang_schafer",
    "load_csv",
    "normal_quantile",
    "parse_rho",
    "run_table",
    "wald_ci",
    "__version__",
]
