"""Thermomajorization curves and the thermomajorization order on populations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from src.services.thermo_core import (
    TOL_P,
    PopulationVector,
    ThermalSystem,
    beta_order,
    gibbs_weights,
)

TOL_C = 1e-9


@dataclass(frozen=True, eq=False)
class ThermoCurve:
    xs: np.ndarray
    ys: np.ndarray

    def __init__(self, xs, ys):
        xs = np.array(xs, dtype=float)
        ys = np.array(ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
            raise ValueError("A curve needs matching x and y elbow coordinates")
        if abs(xs[0]) > TOL_P or abs(ys[0]) > TOL_P:
            raise ValueError("A curve must start at (0, 0)")
        if abs(ys[-1] - 1.0) > TOL_P:
            raise ValueError("A curve must end at height 1")
        if np.any(np.diff(xs) < 0) or np.any(np.diff(ys) < -TOL_P):
            raise ValueError("Curve elbows must be non-decreasing")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def elbows(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.xs, self.ys)]

    @property
    def total_weight(self) -> float:
        return float(self.xs[-1])

    def slopes(self) -> np.ndarray:
        """Slopes of the non-vertical segments, in curve order."""
        dx = np.diff(self.xs)
        dy = np.diff(self.ys)
        keep = dx > 0
        return dy[keep] / dx[keep]


def build_curve(p: PopulationVector, system: ThermalSystem) -> ThermoCurve:
    ordering = beta_order(p, system)
    perm = np.array(ordering.perm)
    weights = gibbs_weights(system)
    xs = np.concatenate(([0.0], np.cumsum(weights[perm])))
    ys = np.concatenate(([0.0], np.cumsum(p.probs[perm])))
    return ThermoCurve(xs, ys)


def curve_eval(curve: ThermoCurve, x: float) -> float:
    """Value of the curve at ``x``; at a vertical jump the top of the jump is returned.

    This includes x = 0: a curve whose first segment is vertical (population on an
    INFINITY level) evaluates to that population there, not to 0. Curves without
    such a segment give 0 at x = 0.
    """
    total = curve.total_weight
    if x < -TOL_P or x > total + TOL_P:
        raise ValueError(f"x = {x!r} is outside [0, {total!r}]")
    x = min(max(x, 0.0), total)
    k = int(np.searchsorted(curve.xs, x, side="right")) - 1
    if k >= curve.xs.size - 1:
        return float(curve.ys[-1])
    x0, x1 = curve.xs[k], curve.xs[k + 1]
    y0, y1 = curve.ys[k], curve.ys[k + 1]
    if x1 <= x0:
        return float(y1)
    return float(y0 + (y1 - y0) * (x - x0) / (x1 - x0))


def curve_dominates(upper: ThermoCurve, lower: ThermoCurve, tol: float = TOL_C) -> bool:
    """Both curves are concave and piecewise linear: checking the merged elbows suffices."""
    if abs(upper.total_weight - lower.total_weight) > TOL_P:
        raise ValueError("Curves belong to systems with different partition functions")
    abscissas = np.union1d(upper.xs, lower.xs)
    for x in abscissas:
        if curve_eval(upper, float(x)) < curve_eval(lower, float(x)) - tol:
            return False
    return True


def thermomajorizes(p1: PopulationVector, p2: PopulationVector, system: ThermalSystem) -> bool:
    return curve_dominates(build_curve(p1, system), build_curve(p2, system))


def curve_to_json(curve: ThermoCurve) -> dict[str, Any]:
    return {"elbows": [[x, y] for x, y in curve.elbows]}


def curve_from_json(payload: dict[str, Any]) -> ThermoCurve:
    elbows = payload.get("elbows")
    if not isinstance(elbows, list) or not elbows:
        raise ValueError("Curve JSON needs a non-empty 'elbows' list")
    try:
        xs = [float(point[0]) for point in elbows]
        ys = [float(point[1]) for point in elbows]
    except (TypeError, IndexError, ValueError):
        raise ValueError("Each elbow must be an [x, y] pair")
    return ThermoCurve(xs, ys)
