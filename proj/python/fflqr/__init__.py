"""Function-on-function linear quantile regression."""

import json

from ._core import (
    ConfigError,
    DataError,
    FpcBasis,
    FpcDecomposition,
    FunctionalSample,
    Grid,
    Model,
    NumericalError,
    PredictionBand,
    QrSolution,
    SimulatedData,
    bootstrap_band,
    coverage,
    cpd,
    direct_band,
    fit,
    forward_select,
    fpc_decompose,
    interval_score,
    mspe,
    qr_fit,
    reconstruct,
    select_truncation,
    uniform_grid,
)
from . import _core

__version__ = "0.1.0"


def sim_config(**overrides):
    """Resolved simulation config as a dict (defaults plus overrides)."""
    return json.loads(_core._config_json(json.dumps(overrides)))


def simulate(seed=1, **config):
    """One synthetic train/test dataset."""
    return _core._simulate(json.dumps(config), seed)


def run_monte_carlo(methods=("fflqr", "fpc_ls", "bspline_ls"), models=("selected",), threads=1, **config):
    """Per-replicate metrics as a list of dicts."""
    return _core._run_monte_carlo(json.dumps(config), list(methods), list(models), threads)
