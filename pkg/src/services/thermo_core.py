"""Thermal systems, population vectors, Gibbs weights and beta-orderings.

Energies are dimensionless (measured in units of 1/beta). The value
``INFINITY`` marks a level whose Gibbs weight is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

INFINITY = math.inf

TOL_P = 1e-9


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class ThermalSystem:
    energies: np.ndarray

    def __init__(self, energies: Sequence[float]):
        array = _frozen(energies)
        if array.ndim != 1 or array.size < 1:
            raise ValueError("A thermal system needs at least one energy level")
        if np.any(np.isnan(array)) or np.any(array == -np.inf):
            raise ValueError("Energies must be finite reals or INFINITY")
        if not np.any(np.isfinite(array)):
            raise ValueError("At least one level must have finite energy (Z > 0)")
        object.__setattr__(self, "energies", array)

    @property
    def size(self) -> int:
        return int(self.energies.size)

    @property
    def weights(self) -> np.ndarray:
        return gibbs_weights(self)

    @property
    def partition(self) -> float:
        return float(np.exp(log_partition(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThermalSystem):
            return NotImplemented
        return self.energies.shape == other.energies.shape and bool(np.all(self.energies == other.energies))

    def __hash__(self) -> int:
        return hash(tuple(self.energies.tolist()))


@dataclass(frozen=True, eq=False)
class PopulationVector:
    probs: np.ndarray

    def __init__(self, probs: Sequence[float]):
        object.__setattr__(self, "probs", _canonical_probs(probs))

    def __len__(self) -> int:
        return int(self.probs.size)

    def __getitem__(self, index: int) -> float:
        return float(self.probs[index])

    def l1_distance(self, other: "PopulationVector") -> float:
        return float(np.abs(self.probs - other.probs).sum())

    def tolist(self) -> list[float]:
        return self.probs.tolist()


@dataclass(frozen=True)
class BetaOrdering:
    perm: tuple[int, ...]
    ratios: tuple[float, ...]


@dataclass(frozen=True)
class PhotoisomerInstance:
    """One yield-bound problem: cis-trans gap ``delta``, excited level ``w``, photoexcitation ``q``."""

    delta: float
    w: float
    q: float

    def __post_init__(self):
        if not math.isfinite(self.delta) or self.delta < 0:
            raise ValueError("delta must be a finite non-negative real")
        if math.isnan(self.w) or self.w < self.delta:
            raise ValueError("w must satisfy w >= delta (INFINITY allowed)")
        if not (math.isfinite(self.q) and 0.0 <= self.q <= 1.0):
            raise ValueError("q must lie in [0, 1]")

    @property
    def w_is_infinite(self) -> bool:
        return math.isinf(self.w)

    def system(self) -> ThermalSystem:
        return ThermalSystem((0.0, self.delta, self.w))

    def gs4_system(self, w_prime: float) -> ThermalSystem:
        if math.isnan(w_prime) or w_prime < self.w:
            raise ValueError("w_prime must satisfy w_prime >= w")
        return ThermalSystem((0.0, self.delta, self.w, w_prime))

    def initial_state(self) -> PopulationVector:
        return PopulationVector((1.0 - self.q, 0.0, self.q))


def _canonical_probs(probs: Sequence[float]) -> np.ndarray:
    array = np.array(probs, dtype=float)
    if array.ndim != 1 or array.size < 1:
        raise ValueError("A population vector needs at least one entry")
    if not np.all(np.isfinite(array)):
        raise ValueError("Populations must be finite")
    if np.any(array < -TOL_P):
        index = int(np.argmin(array))
        raise ValueError(f"Population {index} is negative ({array[index]:.3e})")
    total = array.sum()
    if abs(total - 1.0) > TOL_P:
        raise ValueError(f"Populations sum to {total!r}, expected 1")
    array = np.where(array < 0.0, 0.0, array)
    array = array / array.sum()
    array.flags.writeable = False
    return array


def canonicalize(probs: Sequence[float]) -> PopulationVector:
    return PopulationVector(probs)


def check_compatible(p: PopulationVector, system: ThermalSystem) -> None:
    if len(p) != system.size:
        raise ValueError(f"Population vector has {len(p)} entries, system has {system.size} levels")


def log_partition(system: ThermalSystem) -> float:
    return float(logsumexp(-system.energies))


def gibbs_weights(system: ThermalSystem) -> np.ndarray:
    # exp(-inf) is exactly 0.0, so INFINITY levels get zero weight
    weights = np.exp(-system.energies)
    weights.flags.writeable = False
    return weights


def gibbs_state(system: ThermalSystem) -> PopulationVector:
    return PopulationVector(np.exp(-system.energies - log_partition(system)))


def _order_keys(p: PopulationVector, system: ThermalSystem) -> tuple[np.ndarray, np.ndarray]:
    """ln(p_i / w_i) = ln p_i + E_i per level, plus its category.

    Categories: 0 for occupied INFINITY levels (ratio +inf), 1 for finite energies,
    2 for empty INFINITY levels. Only INFINITY energies leave category 1, however
    small exp(-E_i) is in floating point.
    """
    energies = system.energies
    probs = p.probs
    finite = np.isfinite(energies)
    category = np.where(finite, 1, np.where(probs > 0.0, 0, 2))
    with np.errstate(divide="ignore"):
        log_ratios = np.where(finite, np.log(probs) + np.where(finite, energies, 0.0), 0.0)
    return log_ratios, category


def beta_order(p: PopulationVector, system: ThermalSystem) -> BetaOrdering:
    """Sort levels by p_i / w_i, largest first; ties keep ascending level index."""
    check_compatible(p, system)
    log_ratios, category = _order_keys(p, system)
    indices = np.arange(log_ratios.size)
    perm = np.lexsort((indices, -log_ratios, category))
    with np.errstate(over="ignore"):
        ratios = np.where(category == 0, np.inf, np.where(category == 2, 0.0, np.exp(log_ratios)))
    return BetaOrdering(
        perm=tuple(int(i) for i in perm),
        ratios=tuple(float(ratios[i]) for i in perm),
    )
