"""Python front end for the dses registration engine.

Configs are plain dicts with the same keys as the JSON files read by the
``dses`` command-line tool.
"""

import json

import numpy as np

from . import _core
from ._core import (
    IoError,
    NoCandidateError,
    PreconditionError,
    SearchTooLargeError,
    oracle_check,
    rotation_from_euler,
)

__all__ = [
    "IoError",
    "NoCandidateError",
    "PreconditionError",
    "SearchTooLargeError",
    "make_instance",
    "mode_translation",
    "oracle_check",
    "register",
    "rotation_from_euler",
    "run_batch",
]


def _points(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) array, got shape {a.shape}")
    return a


def _dump(cfg):
    return json.dumps(cfg) if cfg else ""


def register(source, reference, search=None, exhaustive=False):
    """Registers ``source`` onto ``reference``; returns the report dict.

    ``report["matrix"]`` is the 4x4 transform mapping source points onto the
    reference.
    """
    return _core.register_clouds(_points(source), _points(reference), _dump(search), exhaustive)


def mode_translation(source, reference, rotation, bin):
    return _core.mode_translation(_points(source), _points(reference), np.asarray(rotation, dtype=np.float64), bin)


def make_instance(scenario=None, seed=0):
    """Returns (source, reference, ground_truth) for one synthetic trial."""
    return _core.make_instance(_dump(scenario), seed)


def run_batch(scenario, search, trials, seed, local=False, relaxed=(1.0, 0.1)):
    """Runs ``trials`` seeded trials; returns (report dict, CSV text)."""
    return _core.run_batch(_dump(scenario), _dump(search), trials, seed, local, relaxed[0], relaxed[1])
