"""Small-noise SDEs with sampled feedback: ensembles, moment curves, rate fits."""

from ._core import (
    ConfigError,
    FitError,
    PathDivergence,
    ProbeError,
    builtin_model_names,
    fit_rate,
    gaussian_check,
    moment_curves,
    probe_assumptions,
    run_ensemble,
    run_ladder,
    simulate_path,
)

__all__ = [
    "ConfigError",
    "FitError",
    "PathDivergence",
    "ProbeError",
    "builtin_model_names",
    "fit_rate",
    "gaussian_check",
    "moment_curves",
    "probe_assumptions",
    "run_ensemble",
    "run_ladder",
    "simulate_path",
]
