"""Photoisomerization yield bounds for the three-level model (0, delta, W) started in (1 - q, 0, q).

gamma_star is the best yield over all thermal operations, gamma_markov over
Markovian ones, gamma_embed over single-generator (embeddable) ones in the
W -> infinity limit, and gamma_th the equilibrium yield.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit, exprel

from src.services.gibbs_maps import (
    GS3Params,
    GS4Params,
    GibbsStochasticMatrix,
    embed_gs3_in_gs4,
    gs3_inf_from_params,
    sample_gs4_batch,
)
from src.services.markov_reach import ordering_paths, replay_witness
from src.services.thermo_core import PhotoisomerInstance, beta_order
from src.services.thermomaj import build_curve, curve_eval
from src.utils.validators import format_energy

logger = logging.getLogger(__name__)

K_MAX = 1.0 - 1e-6
DEFAULT_EMBED_GRID = 400
DEFAULT_REFINE_ROUNDS = 6
REFINE_GRID = 41
DEFAULT_GS4_SAMPLES = 10**4


def q_tilde(w: float) -> float:
    """Photoexcitation threshold 1 / (1 + e^W); 0 when W is infinite."""
    return float(expit(-w))


def _exponentials(instance: PhotoisomerInstance) -> tuple[float, float]:
    return math.exp(-instance.delta), math.exp(-instance.w)


def upper_branch(instance: PhotoisomerInstance) -> bool:
    return instance.q >= q_tilde(instance.w)


def gamma_th(instance: PhotoisomerInstance) -> float:
    ed, ew = _exponentials(instance)
    return ed / (1.0 + ed + ew)


def yield_of_gs3(params: GS3Params, instance: PhotoisomerInstance) -> float:
    ed, ew = _exponentials(instance)
    q = instance.q
    return (1.0 - q) * ed * (1.0 - params.g3) + ((1.0 + ew) * q - ew) * params.g4


def yield_of_gs4(params: GS4Params, instance: PhotoisomerInstance, w_prime: float) -> float:
    three_level = GS3Params(g1=params.g1, g2=params.g2, g3=params.g3, g4=params.g4)
    return yield_of_gs3(three_level, instance) - (1.0 - instance.q) * math.exp(-w_prime) * params.g6


def optimal_gs3_params(instance: PhotoisomerInstance) -> GS3Params:
    return GS3Params(g1=1.0, g2=0.0, g3=0.0, g4=1.0 if upper_branch(instance) else 0.0)


def gamma_star(instance: PhotoisomerInstance) -> float:
    ed, ew = _exponentials(instance)
    q = instance.q
    if upper_branch(instance):
        return q + (1.0 - q) * (ed - ew)
    return (1.0 - q) * ed


def gamma_star_bruteforce(instance: PhotoisomerInstance, grid_n: int = 200) -> float:
    """Grid search over (g3, g4); (g1, g2) feasibility is an interval condition decided in closed form."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    ed, ew = _exponentials(instance)
    g3, g4 = np.meshgrid(np.linspace(0.0, 1.0, grid_n), np.linspace(0.0, 1.0, grid_n), indexing="ij")
    # g1 ed + g2 ew ranges over [0, s_max] and must lie in [lower, 1]
    lower = (1.0 - g3) * ed - g4 * ew
    s_max = (1.0 - g3) * ed + (1.0 - g4) * ew
    feasible = (lower >= 0.0) & (lower <= 1.0) & (lower <= s_max)
    q = instance.q
    yields = (1.0 - q) * ed * (1.0 - g3) + ((1.0 + ew) * q - ew) * g4
    return float(np.max(np.where(feasible, yields, -np.inf)))


def gamma_markov(instance: PhotoisomerInstance) -> float:
    ed = math.exp(-instance.delta)
    q = instance.q
    # e^-delta / (e^-delta + e^-W); stays defined when both exponentials underflow
    to_isomer = float(expit(instance.w - instance.delta))
    if upper_branch(instance):
        return (q + (1.0 - q) * ed / (1.0 + ed)) * to_isomer
    return (1.0 - q * (1.0 - to_isomer)) * ed / (1.0 + ed)


def gamma_markov_paths(instance: PhotoisomerInstance) -> tuple[float, float]:
    """Yields of the two orderings paths, read off each final curve at x = e^-delta."""
    if not upper_branch(instance):
        raise ValueError("path yields are defined for q >= q_tilde")
    system = instance.system()
    p0 = instance.initial_state()
    perm = beta_order(p0, system).perm
    # the empty delta level ties with any other empty level; it goes last
    ordering = tuple(level for level in perm if level != 1) + (1,)
    paths = ordering_paths(ordering)
    ed = math.exp(-instance.delta)
    values = []
    for path in (paths.path_a, paths.path_b):
        final = replay_witness(p0, path, system)
        values.append(curve_eval(build_curve(final, system), ed))
    return values[0], values[1]


def f_k_array(k1, k2) -> np.ndarray:
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    if np.any(k1 < 0.0) or np.any(k2 < 0.0) or np.any(k1 >= 1.0) or np.any(k2 >= 1.0):
        raise ValueError("f_k needs arguments in [0, 1)")
    x = np.log1p(-k1)
    y = np.log1p(-k2)
    value = 1.0 - (1.0 - k1) * (1.0 - x * exprel(y - x))
    return np.where((k1 == 0.0) | (k2 == 0.0), 0.0, value)


def f_k(k1: float, k2: float) -> float:
    return float(f_k_array(k1, k2))


@dataclass(frozen=True)
class EmbeddableYieldWitness:
    value: float
    k1: float
    k2: float
    k3: float
    matrix: GibbsStochasticMatrix


def _embed_grid_values(k1, k2, q: float, ed: float):
    z = 1.0 + ed
    gth = ed / z
    f = f_k_array(k1, k2)
    k3 = np.maximum(-1.0, 2.0 * f / z - k2)
    feasible = (k3 <= k2 - 2.0 * f * ed / z) & (k1 >= f - 1e-12)
    values = (1.0 - q) * gth * k1 + 0.5 * q * (k2 - k3)
    return np.where(feasible, values, -np.inf), k3


def _best_on_grid(k1_axis, k2_axis, q, ed):
    k1, k2 = np.meshgrid(k1_axis, k2_axis, indexing="ij")
    values, k3 = _embed_grid_values(k1, k2, q, ed)
    index = np.unravel_index(int(np.argmax(values)), values.shape)
    return float(values[index]), float(k1[index]), float(k2[index]), float(k3[index])


def embeddable_yield_witness(
    delta: float,
    q: float,
    grid_n: int = DEFAULT_EMBED_GRID,
    refine_rounds: int = DEFAULT_REFINE_ROUNDS,
) -> EmbeddableYieldWitness:
    """Best embeddable yield for W -> infinity, with its (k1, k2, k3) and matrix.

    k3 is eliminated analytically (the objective decreases in k3), leaving a
    dense (k1, k2) grid followed by zoomed grids around the incumbent.
    """
    if not math.isfinite(delta) or delta < 0.0:
        raise ValueError("delta must be a finite non-negative real")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    ed = math.exp(-delta)
    axis = np.linspace(0.0, K_MAX, grid_n)
    best = _best_on_grid(axis, axis, q, ed)
    step = K_MAX / (grid_n - 1)
    for _ in range(refine_rounds):
        _, k1, k2, _ = best
        k1_axis = np.linspace(max(0.0, k1 - 2 * step), min(K_MAX, k1 + 2 * step), REFINE_GRID)
        k2_axis = np.linspace(max(0.0, k2 - 2 * step), min(K_MAX, k2 + 2 * step), REFINE_GRID)
        candidate = _best_on_grid(k1_axis, k2_axis, q, ed)
        if candidate[0] > best[0]:
            best = candidate
        step = 4 * step / (REFINE_GRID - 1)
    value, k1, k2, k3 = best
    z = 1.0 + ed
    g2 = max(0.0, 0.5 * (k2 + k3))
    g4 = max(0.0, 0.5 * (k2 - k3))
    matrix = gs3_inf_from_params(k1 / z, g2, g4, delta)
    logger.debug("Embeddable optimum delta=%g q=%g: %.9f at k=(%g, %g, %g)", delta, q, value, k1, k2, k3)
    return EmbeddableYieldWitness(value=value, k1=k1, k2=k2, k3=k3, matrix=matrix)


def gamma_embed_optimize(
    delta: float,
    q: float,
    grid_n: int = DEFAULT_EMBED_GRID,
    refine_rounds: int = DEFAULT_REFINE_ROUNDS,
) -> float:
    return embeddable_yield_witness(delta, q, grid_n, refine_rounds).value


def sampled_gs4_yields(
    instance: PhotoisomerInstance,
    w_prime: float,
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Yields of random four-level Gibbs-stochastic matrices acting on (1 - q, 0, q, 0)."""
    if instance.w_is_infinite or not math.isfinite(w_prime):
        raise ValueError("four-level sampling needs finite W and W'")
    matrices = sample_gs4_batch(rng, instance.delta, instance.w, w_prime, samples)
    initial = np.array([1.0 - instance.q, 0.0, instance.q, 0.0])
    return (matrices @ initial)[:, 1]


def gamma_star_gs4_bound(
    instance: PhotoisomerInstance,
    w_prime: float,
    samples: int = DEFAULT_GS4_SAMPLES,
    seed: int = 0,
) -> float:
    """Best four-level yield among random samples and the block-embedded optimal three-level map."""
    if w_prime < instance.w:
        raise ValueError("w_prime must satisfy w_prime >= w")
    embedded = embed_gs3_in_gs4(optimal_gs3_params(instance))
    best = yield_of_gs4(embedded, instance, w_prime)
    if samples > 0:
        yields = sampled_gs4_yields(instance, w_prime, samples, np.random.default_rng(seed))
        best = max(best, float(yields.max()))
    return best


@dataclass(frozen=True)
class YieldReport:
    delta: float
    w: float
    q: float
    gamma_star: float
    gamma_markov: float
    gamma_embed: float | None
    gamma_th: float
    q_tilde: float
    upper_branch: bool

    @property
    def gap_star_markov(self) -> float:
        return self.gamma_star - self.gamma_markov

    @property
    def gap_markov_embed(self) -> float | None:
        if self.gamma_embed is None:
            return None
        return self.gamma_markov - self.gamma_embed

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta": self.delta,
            "w": format_energy(self.w),
            "q": self.q,
            "gamma_star": self.gamma_star,
            "gamma_markov": self.gamma_markov,
            "gamma_embed": self.gamma_embed,
            "gamma_th": self.gamma_th,
            "q_tilde": self.q_tilde,
            "upper_branch": self.upper_branch,
            "gap_star_markov": self.gap_star_markov,
            "gap_markov_embed": self.gap_markov_embed,
        }


def report(instance: PhotoisomerInstance, embed_grid: int = DEFAULT_EMBED_GRID, with_embed: bool = True) -> YieldReport:
    gamma_embed = None
    if with_embed and instance.w_is_infinite:
        gamma_embed = gamma_embed_optimize(instance.delta, instance.q, grid_n=embed_grid)
    return YieldReport(
        delta=instance.delta,
        w=instance.w,
        q=instance.q,
        gamma_star=gamma_star(instance),
        gamma_markov=gamma_markov(instance),
        gamma_embed=gamma_embed,
        gamma_th=gamma_th(instance),
        q_tilde=q_tilde(instance.w),
        upper_branch=upper_branch(instance),
    )
