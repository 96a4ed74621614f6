"""Catalytic branching random walk laboratory.

Thin python face over the C++ core: model construction, calibration,
ensemble summaries, exact expectation recursions, and the config-driven
experiment runner.
"""

from _cbrwlab import (
    CbrwError,
    DerivedParams,
    LlnSummary,
    Model,
    derive,
    expectation_profile,
    many_to_one_gap,
    multicat_calibrate,
    run_experiment,
    run_lln,
)

__all__ = [
    "CbrwError",
    "DerivedParams",
    "LlnSummary",
    "Model",
    "derive",
    "expectation_profile",
    "many_to_one_gap",
    "multicat_calibrate",
    "run_experiment",
    "run_lln",
]
