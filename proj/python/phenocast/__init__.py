"""Python access to the phenocast C++ library.

Functions returning models or distributions give plain dicts parsed from the
library's JSON output.
"""

import json as _json

from . import _phenocast
from ._phenocast import (
    ComputationError,
    ParseError,
    ValidationError,
    hazard_mass,
    log_likelihood,
    run_cli,
    simulate_arma,
)

__all__ = [
    "ComputationError",
    "ParseError",
    "ValidationError",
    "fit",
    "fit_arma",
    "hazard_mass",
    "log_likelihood",
    "predict",
    "run_cli",
    "simulate_arma",
]


def fit(family, bloom, temp, fast=False):
    """Fit a hazard model family to bloom and temperature CSV files."""
    return _json.loads(_phenocast.fit(family, str(bloom), str(temp), fast))


def fit_arma(x, p, d, q):
    """CSS fit of an ARIMA(p, d, q) model to a remainder series."""
    return _json.loads(_phenocast.fit_arma(list(x), p, d, q))


def predict(model, temp, year, day, n_paths=1000, seed=0, alpha=0.05):
    """Predictive bloom-day distribution; `model` is a dict from fit()."""
    text = _json.dumps(model)
    return _json.loads(_phenocast.predict(text, str(temp), year, day, n_paths, seed, alpha))
