"""Weighted Benjamini-Hochberg procedures for correlated Gaussian and t statistics."""

import json as _json

from ._core import (
    InvalidInput,
    NumericalFailure,
    StepUpOutcome,
    Selection,
    calibrate,
    calibrate_alpha1,
    chi2_isf,
    chi2_sf,
    correlation_weights,
    equicorrelated_weight,
    f_isf,
    f_sf,
    nc_chi2_sf,
    select_variables,
    simes_global,
    simulate_json,
    statistic_space_stepup,
    stepup,
    transform_pvalue,
    weighted_bh_t,
    weighted_bh_z,
)


def simulate(scenario, reps=0, seed=0, workers=1):
    """Run a scenario file (dict or JSON text) and return the parsed report."""
    text = scenario if isinstance(scenario, str) else _json.dumps(scenario)
    return _json.loads(simulate_json(text, reps, seed, workers))


__all__ = [
    "InvalidInput",
    "NumericalFailure",
    "StepUpOutcome",
    "Selection",
    "calibrate",
    "calibrate_alpha1",
    "chi2_isf",
    "chi2_sf",
    "correlation_weights",
    "equicorrelated_weight",
    "f_isf",
    "f_sf",
    "nc_chi2_sf",
    "select_variables",
    "simes_global",
    "simulate",
    "statistic_space_stepup",
    "stepup",
    "transform_pvalue",
    "weighted_bh_t",
    "weighted_bh_z",
]
