"""Two-level thermalizations and a sequence search for Markovian (continuous) reachability.

A found witness is a constructive certificate; a negative answer only means
nothing was found at the requested resolution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import expit

from src.services.thermo_core import (
    TOL_P,
    PhotoisomerInstance,
    PopulationVector,
    ThermalSystem,
    check_compatible,
    gibbs_weights,
)
from src.utils.formats import WitnessStepModel

logger = logging.getLogger(__name__)

TOL_R = 1e-3
DEFAULT_MAX_STEPS = 6
DEFAULT_LAMBDA_STEP = 0.01
REFINE_TOP_K = 8
JOINT_REFINE_DEPTH = 3

MATCH = "match"
YIELD = "yield"


@dataclass(frozen=True)
class ThermalizationStep:
    pair: tuple[int, int]
    lam: float = 1.0

    def __post_init__(self):
        i, j = self.pair
        if i == j:
            raise ValueError(f"thermalization pair ({i}, {j}) must hold distinct levels")
        if min(i, j) < 0:
            raise ValueError("level indices must be non-negative")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda = {self.lam} is outside [0, 1]")
        object.__setattr__(self, "pair", (int(i), int(j)))
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class ReachabilityResult:
    reachable: bool
    witness: tuple[ThermalizationStep, ...]
    achieved_state: PopulationVector
    mode: str = MATCH
    score: float = math.nan
    max_steps: int = DEFAULT_MAX_STEPS
    lambda_step: float = DEFAULT_LAMBDA_STEP
    explored: int = 0

    @property
    def resolution(self) -> str:
        return f"max_steps={self.max_steps}, lambda_step={self.lambda_step:g}"


@dataclass(frozen=True)
class OrderingPaths:
    path_a: tuple[ThermalizationStep, ...]
    path_b: tuple[ThermalizationStep, ...]


@dataclass
class _Node:
    pairs: tuple[tuple[int, int], ...]
    lams: tuple[float, ...]
    probs: np.ndarray
    score: float = field(default=math.inf)


def _pair_weights(weights: np.ndarray, i: int, j: int) -> tuple[float, float]:
    n = weights.size
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise ValueError(f"invalid level pair ({i}, {j}) for {n} levels")
    total = weights[i] + weights[j]
    if total <= 0.0:
        raise ValueError(f"levels {i} and {j} both have zero Gibbs weight")
    return weights[i] / total, weights[j] / total


def _thermalize(probs: np.ndarray, i: int, j: int, lam, weights: np.ndarray) -> np.ndarray:
    """Array kernel; ``lam`` may be a 1-D array, giving one row per value."""
    share_i, share_j = _pair_weights(weights, i, j)
    lam = np.asarray(lam, dtype=float)
    out = np.broadcast_to(probs, lam.shape + probs.shape).copy()
    pool = probs[i] + probs[j]
    out[..., i] = (1.0 - lam) * probs[i] + lam * pool * share_i
    out[..., j] = (1.0 - lam) * probs[j] + lam * pool * share_j
    return out


def full_thermalization(p: PopulationVector, i: int, j: int, system: ThermalSystem) -> PopulationVector:
    check_compatible(p, system)
    return PopulationVector(_thermalize(p.probs, i, j, 1.0, gibbs_weights(system)))


def partial_thermalization(
    p: PopulationVector, i: int, j: int, lam: float, system: ThermalSystem
) -> PopulationVector:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda = {lam} is outside [0, 1]")
    check_compatible(p, system)
    return PopulationVector(_thermalize(p.probs, i, j, lam, gibbs_weights(system)))


def _replay_array(probs: np.ndarray, pairs, lams, weights: np.ndarray) -> np.ndarray:
    for (i, j), lam in zip(pairs, lams):
        probs = _thermalize(probs, i, j, lam, weights)
    return probs


def replay_witness(
    p0: PopulationVector, steps: Iterable[ThermalizationStep], system: ThermalSystem
) -> PopulationVector:
    check_compatible(p0, system)
    steps = list(steps)
    probs = _replay_array(p0.probs, [s.pair for s in steps], [s.lam for s in steps], gibbs_weights(system))
    return PopulationVector(probs)


def witness_to_json(steps: Sequence[ThermalizationStep]) -> list[dict[str, Any]]:
    return [{"pair": list(step.pair), "lambda": step.lam} for step in steps]


def witness_from_json(payload) -> list[ThermalizationStep]:
    if not isinstance(payload, list):
        raise ValueError("witness must be a JSON list")
    steps = []
    for item in payload:
        model = WitnessStepModel.model_validate(item)
        steps.append(ThermalizationStep(pair=model.pair, lam=model.lambda_))
    return steps


# Closed-form curves for the photoisomer initial state (1 - q, 0, q) in the regime q >= q_tilde.


def _require_upper_regime(instance: PhotoisomerInstance) -> None:
    if instance.q < expit(-instance.w):
        raise ValueError("closed-form curves need q >= q_tilde (excited level first in the beta-ordering)")


def _check_abscissa(x: float, total: float) -> float:
    if x < -TOL_P or x > total + TOL_P:
        raise ValueError(f"x = {x!r} is outside [0, {total!r}]")
    return min(max(x, 0.0), total)


def photoisomer_initial_curve(x: float, instance: PhotoisomerInstance) -> float:
    _require_upper_regime(instance)
    q = instance.q
    ed = math.exp(-instance.delta)
    ew = math.exp(-instance.w)
    x = _check_abscissa(x, 1.0 + ed + ew)
    if x < ew:
        return q * x / ew
    if x <= 1.0 + ew:
        return q + (1.0 - q) * (x - ew)
    return 1.0


def photoisomer_post_curve(x: float, instance: PhotoisomerInstance) -> float:
    """Curve after fully thermalizing (0, delta) and then (delta, W)."""
    _require_upper_regime(instance)
    q = instance.q
    ed = math.exp(-instance.delta)
    ew = math.exp(-instance.w)
    x = _check_abscissa(x, 1.0 + ed + ew)
    elbow = ed + ew
    pool = q + (1.0 - q) * ed / (1.0 + ed)
    if x <= elbow:
        # both weights can underflow, leaving a vertical first segment
        return pool if elbow == 0.0 else pool * x / elbow
    return q + (1.0 - q) * (x - ew) / (1.0 + ed)


def ordering_paths(ordering: Sequence[int], target_level: int = 1) -> OrderingPaths:
    """Adjacent-transposition sequences moving ``target_level`` from last to first.

    With ordering (x, y, target): path A swaps (x, y), then (x, target), then
    (y, target); path B swaps (y, target), then (x, target).
    """
    ordering = tuple(int(level) for level in ordering)
    if len(ordering) != 3 or sorted(ordering) != [0, 1, 2]:
        raise ValueError(f"ordering {ordering} is not a permutation of three levels")
    if ordering[-1] != target_level:
        raise ValueError(f"ordering {ordering} must end with level {target_level}")
    x, y, t = ordering
    path_a = (ThermalizationStep((x, y)), ThermalizationStep((x, t)), ThermalizationStep((y, t)))
    path_b = (ThermalizationStep((y, t)), ThermalizationStep((x, t)))
    return OrderingPaths(path_a=path_a, path_b=path_b)


# Sequence search


def _all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


class _Objective:
    def __init__(self, mode: str, target: np.ndarray | None, level: int | None, target_value: float):
        self.mode = mode
        self.target = target
        self.level = level
        self.target_value = target_value

    def score(self, probs: np.ndarray) -> np.ndarray:
        """Lower is better; works on a single state or a stack of states."""
        if self.mode == MATCH:
            return np.sum((probs - self.target) ** 2, axis=-1)
        return -probs[..., self.level]

    def success(self, probs: np.ndarray) -> bool:
        if self.mode == MATCH:
            return float(np.abs(probs - self.target).sum()) <= TOL_R
        return float(probs[self.level]) >= self.target_value - 1e-12


def _best_lambda(probs, pair, weights, objective: _Objective, lambda_step: float) -> tuple[float, np.ndarray]:
    grid = np.linspace(0.0, 1.0, int(round(1.0 / lambda_step)) + 1)
    candidates = _thermalize(probs, pair[0], pair[1], grid, weights)
    scores = objective.score(candidates)
    k = int(np.argmin(scores))
    lam, best = float(grid[k]), float(scores[k])
    lo, hi = max(0.0, lam - lambda_step), min(1.0, lam + lambda_step)
    if hi > lo:
        refined = minimize_scalar(
            lambda value: float(objective.score(_thermalize(probs, pair[0], pair[1], value, weights))),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if refined.success and refined.fun < best:
            lam = float(refined.x)
    return lam, _thermalize(probs, pair[0], pair[1], lam, weights)


def _refine_jointly(node: _Node, p0: np.ndarray, weights, objective: _Objective) -> _Node:
    if not node.pairs:
        return node

    def cost(lams):
        return float(objective.score(_replay_array(p0, node.pairs, np.clip(lams, 0.0, 1.0), weights)))

    best = node
    for start in (np.array(node.lams), np.ones(len(node.pairs))):
        result = minimize(
            cost,
            start,
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * len(node.pairs),
            options={"ftol": 1e-14, "gtol": 1e-10, "maxiter": 200},
        )
        lams = tuple(float(v) for v in np.clip(result.x, 0.0, 1.0))
        probs = _replay_array(p0, node.pairs, lams, weights)
        score = float(objective.score(probs))
        if score < best.score:
            best = _Node(pairs=node.pairs, lams=lams, probs=probs, score=score)
    return best


def _result_from(node: _Node, p0: PopulationVector, system, objective, reachable, max_steps, lambda_step, explored):
    steps = tuple(ThermalizationStep(pair, lam) for pair, lam in zip(node.pairs, node.lams))
    achieved = replay_witness(p0, steps, system)
    return ReachabilityResult(
        reachable=reachable,
        witness=steps if reachable else (),
        achieved_state=achieved,
        mode=objective.mode,
        score=float(objective.score(achieved.probs)),
        max_steps=max_steps,
        lambda_step=lambda_step,
        explored=explored,
    )


def _search(
    p0: PopulationVector,
    system: ThermalSystem,
    objective: _Objective,
    max_steps: int,
    lambda_step: float,
    stop_on_success: bool,
) -> tuple[_Node, bool, int]:
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    if not 0.0 < lambda_step <= 1.0:
        raise ValueError("lambda_step must lie in (0, 1]")
    weights = gibbs_weights(system)
    pairs = [pair for pair in _all_pairs(system.size) if weights[pair[0]] + weights[pair[1]] > 0.0]
    root = _Node(pairs=(), lams=(), probs=p0.probs.copy())
    root.score = float(objective.score(root.probs))
    if stop_on_success and objective.success(root.probs):
        return root, True, 1

    visited = [root]
    frontier = [root]
    for depth in range(1, max_steps + 1):
        next_frontier = []
        for node in frontier:
            for pair in pairs:
                if node.pairs and node.pairs[-1] == pair:
                    continue
                lam, probs = _best_lambda(node.probs, pair, weights, objective, lambda_step)
                child = _Node(node.pairs + (pair,), node.lams + (lam,), probs, float(objective.score(probs)))
                visited.append(child)
                next_frontier.append(child)
                if stop_on_success and objective.success(probs):
                    logger.debug("Reachability search succeeded at depth %d after %d nodes", depth, len(visited))
                    return child, True, len(visited)
        frontier = next_frontier

    # short sequences are always refined jointly; longer ones only when they rank among the best
    ranked = [node for node in visited if 0 < len(node.pairs) <= JOINT_REFINE_DEPTH]
    # stable sort keeps breadth-first order among equal scores
    for node in sorted(visited, key=lambda node: node.score)[:REFINE_TOP_K]:
        if len(node.pairs) > JOINT_REFINE_DEPTH:
            ranked.append(node)
    best = min(visited, key=lambda node: node.score)
    for node in ranked:
        refined = _refine_jointly(node, p0.probs, weights, objective)
        if refined.score < best.score:
            best = refined
        if stop_on_success and objective.success(refined.probs):
            return refined, True, len(visited)
    logger.debug("Reachability search explored %d nodes, best score %.3e", len(visited), best.score)
    return best, objective.success(best.probs), len(visited)


def ctm_reachable(
    p0: PopulationVector,
    target: PopulationVector,
    system: ThermalSystem,
    max_steps: int = DEFAULT_MAX_STEPS,
    lambda_step: float = DEFAULT_LAMBDA_STEP,
    mode: str = MATCH,
    level: int | None = None,
) -> ReachabilityResult:
    """Search sequences of partial two-level thermalizations from ``p0`` towards ``target``.

    In ``match`` mode success means an L1 distance of at most TOL_R; in
    ``yield`` mode it means the population of ``level`` reaches the target's.
    """
    check_compatible(p0, system)
    check_compatible(target, system)
    if mode == MATCH:
        objective = _Objective(MATCH, target.probs, None, math.nan)
    elif mode == YIELD:
        if level is None or not 0 <= level < system.size:
            raise ValueError("yield mode needs a valid level index")
        objective = _Objective(YIELD, None, level, float(target.probs[level]))
    else:
        raise ValueError(f"unknown search mode {mode!r}")
    node, found, explored = _search(p0, system, objective, max_steps, lambda_step, stop_on_success=True)
    return _result_from(node, p0, system, objective, found, max_steps, lambda_step, explored)


def max_population_search(
    p0: PopulationVector,
    system: ThermalSystem,
    level: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    lambda_step: float = DEFAULT_LAMBDA_STEP,
) -> ReachabilityResult:
    """Largest population of ``level`` the sequence search can reach; the witness always replays."""
    check_compatible(p0, system)
    if not 0 <= level < system.size:
        raise ValueError(f"level {level} is out of range")
    objective = _Objective(YIELD, None, level, math.inf)
    node, _, explored = _search(p0, system, objective, max_steps, lambda_step, stop_on_success=False)
    return _result_from(node, p0, system, objective, True, max_steps, lambda_step, explored)
