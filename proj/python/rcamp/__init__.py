"""Communication-aware navigation simulator: radio world, GP signal mapping, randomized A* and mission runs."""

import json
from pathlib import Path

from . import _core
from ._core import (
    ScenarioError,
    UntrainedModel,
    deterministic_rss,
    log_marginal_likelihood,
    optimize_hyperparams,
    plan,
    predict,
)

__all__ = [
    "ScenarioError",
    "UntrainedModel",
    "deterministic_rss",
    "load_scenario",
    "log_marginal_likelihood",
    "optimize_hyperparams",
    "plan",
    "predict",
    "run",
]


def _as_json(scenario):
    if isinstance(scenario, (str, Path)) and not str(scenario).lstrip().startswith("{"):
        return Path(scenario).read_text()
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    return str(scenario)


def load_scenario(scenario):
    """Validated scenario with every default filled in, as a dict."""
    return json.loads(_core.resolve_scenario(_as_json(scenario)))


def run(scenario, mode="rcamp", seed=None, dump_every=0, out=None):
    """Run a scenario (path, JSON text or dict).

    Returns (summary dict, trace) where trace is an (n, 4) array of
    x, y, filtered RSS (NaN when nothing is heard) and connected flag.
    """
    summary, trace = _core.run(_as_json(scenario), mode, seed, dump_every, None if out is None else str(out))
    return json.loads(summary), trace
