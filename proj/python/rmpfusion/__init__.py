"""Structured motion-policy trees: evaluation, learning and simulation."""

import json
from pathlib import Path

import numpy as np

from ._core import (
    SCHEMA_VERSION,
    ConfigError,
    DimensionError,
    Error,
    NumericError,
    Policy,
    SingularityError,
    StabilityContractError,
    Tree,
    fixture_names,
)
from . import _core

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "DimensionError",
    "Error",
    "NumericError",
    "Policy",
    "SingularityError",
    "StabilityContractError",
    "Tree",
    "fixture_names",
    "load_checkpoint",
    "load_tree",
    "rollout",
    "run_experiment",
    "verify",
]


def load_tree(path):
    return Tree.from_json(Path(path).read_text())


def load_checkpoint(path):
    """Returns (policy, params, iteration)."""
    return _core.load_checkpoint(Path(path).read_text())


def verify(suite, seed=0, cases=-1):
    return json.loads(_core.verify(suite, seed, cases))


def rollout(policy, params, env, q0, qd0, horizon=10.0, dt=1e-2, method="rk4"):
    """env is an environment document (dict)."""
    return policy.rollout(
        list(params),
        json.dumps(env),
        np.asarray(q0, dtype=float),
        np.asarray(qd0, dtype=float),
        horizon,
        dt,
        method,
    )


def run_experiment(config, iterations=-1):
    """Generates data, trains and evaluates. config is a dict or a path to a config file."""
    if isinstance(config, (str, Path)):
        path = Path(config)
        text, base = path.read_text(), path.parent
    else:
        text, base = json.dumps(config), Path()
    return json.loads(_core.run_experiment(text, base, iterations))
