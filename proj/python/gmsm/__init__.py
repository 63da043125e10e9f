"""Sharp bounds on causal effects under weighted marginal sensitivity models."""

import json as _json

from ._core import (
    ConfigError,
    DataError,
    NumericError,
    config_hash,
    expectation_bound,
    oracle_effect,
    oracle_gamma,
    quantile_bound,
    ratio_bounds,
    ratio_bounds_explicit,
    shift_discrete,
    simulate,
)
from ._core import run as _run

__version__ = "0.1.0"


def run(config):
    """Run a config given as a dict or JSON text; returns (exit_code, output, log)."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _run(text)


__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "config_hash",
    "expectation_bound",
    "oracle_effect",
    "oracle_gamma",
    "quantile_bound",
    "ratio_bounds",
    "ratio_bounds_explicit",
    "run",
    "shift_discrete",
    "simulate",
]
