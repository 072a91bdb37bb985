"""Monte Carlo power for PDX experiments (Python bindings)."""

from ._core import (
    AnovaParams,
    DataError,
    EngineError,
    FitError,
    FrailtyParams,
    LmmFit,
    FrailtyFit,
    PowerRow,
    anova_from_medians,
    anova_from_pilot,
    fit_frailty_pilot,
    fit_lmm_pilot,
    frailty_from_medians,
    frailty_from_pilot,
    minimal_designs,
    power_csv,
    power_grid,
    power_json,
)

__all__ = [
    "AnovaParams",
    "DataError",
    "EngineError",
    "FitError",
    "FrailtyParams",
    "LmmFit",
    "FrailtyFit",
    "PowerRow",
    "anova_from_medians",
    "anova_from_pilot",
    "fit_frailty_pilot",
    "fit_lmm_pilot",
    "frailty_from_medians",
    "frailty_from_pilot",
    "minimal_designs",
    "power_csv",
    "power_grid",
    "power_json",
]
