"""Python access to the ergodic active sensing core.

Runs take a configuration as a dict or a path to a JSON file and return the
parsed metrics record. Artifacts land in the run's output directory exactly as
the command-line tool writes them.
"""

from __future__ import annotations

import json
from os import PathLike
from pathlib import Path
from typing import Any

from . import _ergsense
from ._ergsense import (
    ErgsenseError,
    basis_indices,
    ergodic_metric,
    read_grid_csv,
    sha256_file,
    target_coefficients,
    trajectory_coefficients,
)

__version__ = _ergsense.__version__

Config = dict[str, Any] | str | PathLike[str] | None


def _load(config: Config) -> tuple[str, str]:
    if config is None:
        return _ergsense.default_config_json(), ""
    if isinstance(config, dict):
        return json.dumps(config), ""
    path = Path(config)
    return path.read_text(), str(path.parent)


def _run(config: Config, stage: str, seed, out, snapshot_interval) -> dict[str, Any]:
    text, base = _load(config)
    res = _ergsense.run_json(
        text, base, stage, seed, None if out is None else str(out), snapshot_interval
    )
    return json.loads(res)


def explore(config: Config = None, *, seed=None, out=None, snapshot_interval=None, eer=False):
    """Stage 1: learn the measurement likelihood. Returns metrics, checksum and out_dir."""
    return _run(config, "eer-explore" if eer else "explore", seed, out, snapshot_interval)


def localize(config: Config = None, *, seed=None, out=None, snapshot_interval=None, eer=False):
    """Stage 2: particle-filter localization of the scene transform."""
    return _run(config, "eer-localize" if eer else "localize", seed, out, snapshot_interval)


def compare(config: Config = None, *, seed=None, out=None, snapshot_interval=None):
    text, base = _load(config)
    res = _ergsense.compare_json(
        text, base, seed, None if out is None else str(out), snapshot_interval
    )
    return json.loads(res)


def evaluate(run_dir: str | PathLike[str]) -> dict[str, Any]:
    """Re-read a run directory and check it against its metrics and checksum."""
    return json.loads(_ergsense.evaluate_json(str(run_dir)))


def default_config() -> dict[str, Any]:
    return json.loads(_ergsense.default_config_json())


def ground_truth_field(scene: dict[str, Any] | None = None, per_axis: int = 64, eps: float = 1e-3):
    """Noise-aware contact probability of a scene on its model grid, indexed [y, x]."""
    return _ergsense.ground_truth_field("" if scene is None else json.dumps(scene), per_axis, eps)


__all__ = [
    "ErgsenseError",
    "basis_indices",
    "compare",
    "default_config",
    "ergodic_metric",
    "evaluate",
    "explore",
    "ground_truth_field",
    "localize",
    "read_grid_csv",
    "sha256_file",
    "target_coefficients",
    "trajectory_coefficients",
]
