"""Quasi-morphism experiments: symplectic winding, Reeb graphs, Hamiltonian
flows and hyperbolic contact lifts."""

import json as _json

from ._core import (
    EvaluationError,
    NumericalError,
    ValidationError,
    det2,
    geodesic_triangle_area,
    hyperbolic_distance,
    phi_homog,
    phi_rotation_loop,
    reeb_summary,
)
from . import _core


def _spec(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def calabi(scenario):
    """Calabi invariant of the time-one map of a scenario (dict or JSON string)."""
    return _core.calabi(_spec(scenario))


def tau(scenario, p, n_samples, seed, jobs=1):
    return _core.tau(_spec(scenario), p, n_samples, seed, jobs)


def cal_s(isotopy, p, n_points, seed, fiber_samples=8, jobs=1):
    return _core.cal_s(_spec(isotopy), p, n_points, fiber_samples, seed, jobs)


__all__ = [
    "EvaluationError",
    "NumericalError",
    "ValidationError",
    "cal_s",
    "calabi",
    "det2",
    "geodesic_triangle_area",
    "hyperbolic_distance",
    "phi_homog",
    "phi_rotation_loop",
    "reeb_summary",
    "tau",
]
