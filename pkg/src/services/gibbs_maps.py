"""Gibbs-stochastic matrices: construction, validation, sampling, spectra and embeddability.

Matrices act on population column vectors (q = G p), so every column sums to 1
and the Gibbs vector is a fixed point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import expm
from scipy.special import exprel

from src.services.thermo_core import (
    PhotoisomerInstance,
    ThermalSystem,
    gibbs_state,
    gibbs_weights,
    log_partition,
)
from src.utils.errors import ConstraintViolation, SamplerExhausted
from src.utils.formats import MatrixFile, energies_to_json

logger = logging.getLogger(__name__)

TOL_M = 1e-12
TOL_COLUMN = 1e-9
TOL_ZERO_EIGENVALUE = 1e-10
TOL_EMBED = 1e-9
MAX_REJECTIONS = 10**6
SAMPLER_CHUNK = 65536


class GS3Params(BaseModel):
    model_config = ConfigDict(frozen=True)

    g1: float = Field(ge=0.0, le=1.0)
    g2: float = Field(ge=0.0, le=1.0)
    g3: float = Field(ge=0.0, le=1.0)
    g4: float = Field(ge=0.0, le=1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.g1, self.g2, self.g3, self.g4])


class GS4Params(BaseModel):
    model_config = ConfigDict(frozen=True)

    g1: float = Field(ge=0.0, le=1.0)
    g2: float = Field(ge=0.0, le=1.0)
    g3: float = Field(ge=0.0, le=1.0)
    g4: float = Field(ge=0.0, le=1.0)
    g5: float = Field(ge=0.0, le=1.0)
    g6: float = Field(ge=0.0, le=1.0)
    g7: float = Field(ge=0.0, le=1.0)
    g8: float = Field(ge=0.0, le=1.0)
    g9: float = Field(ge=0.0, le=1.0)


@dataclass(frozen=True, eq=False)
class GibbsStochasticMatrix:
    entries: np.ndarray
    system: ThermalSystem

    def apply(self, probs) -> np.ndarray:
        return self.entries @ np.asarray(probs, dtype=float)

    @property
    def size(self) -> int:
        return int(self.entries.shape[0])


@dataclass(frozen=True, eq=False)
class RateMatrix:
    entries: np.ndarray
    system: ThermalSystem


@dataclass(frozen=True)
class MatrixDiagnostics:
    ok: bool
    min_entry: float
    max_column_error: float
    gibbs_residual: float
    failures: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Spectrum3:
    lambda1: complex
    lambda2: complex
    is_complex: bool

    @property
    def values(self) -> tuple:
        return (1.0, self.lambda1, self.lambda2)


class Verdict(str, Enum):
    EMBEDDABLE = "EMBEDDABLE"
    NOT_EMBEDDABLE = "NOT_EMBEDDABLE"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class EmbeddabilityVerdict:
    verdict: Verdict
    clause: str | None
    reason: str
    spectrum: tuple


def _entries_of(matrix) -> np.ndarray:
    if isinstance(matrix, GibbsStochasticMatrix):
        return matrix.entries
    return np.asarray(matrix, dtype=float)


def validate(matrix, system: ThermalSystem) -> MatrixDiagnostics:
    entries = _entries_of(matrix)
    n = system.size
    if entries.shape != (n, n):
        return MatrixDiagnostics(
            ok=False,
            min_entry=math.nan,
            max_column_error=math.nan,
            gibbs_residual=math.nan,
            failures=(f"matrix shape {entries.shape} does not match {n} levels",),
        )
    failures = []
    min_entry = float(entries.min())
    if min_entry < -TOL_M:
        row, col = np.unravel_index(int(np.argmin(entries)), entries.shape)
        failures.append(f"entry ({row}, {col}) is negative ({min_entry:.3e})")
    column_error = float(np.abs(entries.sum(axis=0) - 1.0).max())
    if column_error > TOL_COLUMN:
        failures.append(f"column sums deviate from 1 by {column_error:.3e}")
    gibbs = gibbs_state(system).probs
    residual = float(np.abs(entries @ gibbs - gibbs).max())
    if residual > TOL_COLUMN:
        failures.append(f"Gibbs state is not fixed (residual {residual:.3e})")
    return MatrixDiagnostics(
        ok=not failures,
        min_entry=min_entry,
        max_column_error=column_error,
        gibbs_residual=residual,
        failures=tuple(failures),
    )


def as_gibbs_matrix(entries, system: ThermalSystem) -> GibbsStochasticMatrix:
    """Clamp round-off negatives, then validate; raises ConstraintViolation on failure."""
    array = np.array(entries, dtype=float)
    if array.ndim != 2 or array.shape != (system.size, system.size):
        raise ConstraintViolation(f"matrix shape {array.shape} does not match {system.size} levels")
    if np.any(array < -TOL_M):
        row, col = np.unravel_index(int(np.argmin(array)), array.shape)
        value = float(array[row, col])
        raise ConstraintViolation(
            f"entry ({row}, {col}) is negative ({value:.6g})", entry=(int(row), int(col)), value=value
        )
    array[array < 0.0] = 0.0
    diagnostics = validate(array, system)
    if not diagnostics.ok:
        raise ConstraintViolation("; ".join(diagnostics.failures))
    array.flags.writeable = False
    return GibbsStochasticMatrix(entries=array, system=system)


def gs3_entries(g1, g2, g3, g4, delta: float, w: float) -> np.ndarray:
    """Generic GS3 matrix; broadcasts over array-valued parameters (last two axes are the matrix)."""
    ed = math.exp(-delta)
    ew = math.exp(-w)
    g1, g2, g3, g4 = np.broadcast_arrays(*(np.asarray(g, dtype=float) for g in (g1, g2, g3, g4)))
    rows = [
        [1.0 - g1 * ed - g2 * ew, g1, g2],
        [(1.0 - g3) * ed - g4 * ew, g3, g4],
        [(g2 + g4) * ew - (1.0 - g1 - g3) * ed, 1.0 - g1 - g3, 1.0 - g2 - g4],
    ]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def gs3_from_params(params: GS3Params, instance: PhotoisomerInstance) -> GibbsStochasticMatrix:
    entries = gs3_entries(params.g1, params.g2, params.g3, params.g4, instance.delta, instance.w)
    return as_gibbs_matrix(entries, instance.system())


def gs3_inf_from_params(g1: float, g2: float, g4: float, delta: float) -> GibbsStochasticMatrix:
    """GS3 matrix in the W -> infinity limit; g2 + g4 <= 1 is the only coupling constraint."""
    ed = math.exp(-delta)
    if not 0.0 <= g1 <= 1.0:
        raise ConstraintViolation(f"g1 = {g1} is outside [0, 1]")
    if g2 < 0.0 or g4 < 0.0:
        raise ConstraintViolation("g2 and g4 must be non-negative")
    if g2 + g4 > 1.0 + TOL_M:
        raise ConstraintViolation(f"g2 + g4 = {g2 + g4} exceeds 1", entry=(2, 2), value=1.0 - g2 - g4)
    if 1.0 - g1 * ed < -TOL_M:
        raise ConstraintViolation("1 - g1 exp(-delta) is negative", entry=(0, 0), value=1.0 - g1 * ed)
    entries = [
        [1.0 - g1 * ed, g1, g2],
        [g1 * ed, 1.0 - g1, g4],
        [0.0, 0.0, 1.0 - g2 - g4],
    ]
    return as_gibbs_matrix(entries, ThermalSystem((0.0, delta, math.inf)))


def gs4_entries(params: GS4Params, delta: float, w: float, w_prime: float) -> np.ndarray:
    ed, ew, ewp = math.exp(-delta), math.exp(-w), math.exp(-w_prime)
    g = params
    col2 = 1.0 - g.g1 - g.g3 - g.g7
    col3 = 1.0 - g.g2 - g.g4 - g.g8
    return np.array(
        [
            [1.0 - g.g1 * ed - g.g2 * ew - g.g5 * ewp, g.g1, g.g2, g.g5],
            [(1.0 - g.g3) * ed - g.g4 * ew - g.g6 * ewp, g.g3, g.g4, g.g6],
            [(1.0 - g.g8) * ew - g.g7 * ed - g.g9 * ewp, g.g7, g.g8, g.g9],
            [(g.g5 + g.g6 + g.g9) * ewp - col2 * ed - col3 * ew, col2, col3, 1.0 - g.g5 - g.g6 - g.g9],
        ]
    )


def gs4_from_params(params: GS4Params, delta: float, w: float, w_prime: float) -> GibbsStochasticMatrix:
    system = ThermalSystem((0.0, delta, w, w_prime))
    return as_gibbs_matrix(gs4_entries(params, delta, w, w_prime), system)


def embed_gs3_in_gs4(params: GS3Params) -> GS4Params:
    """Parameters of the block matrix G3 (+) 1 acting on (0, delta, W, W')."""
    return GS4Params(
        g1=params.g1,
        g2=params.g2,
        g3=params.g3,
        g4=params.g4,
        g5=0.0,
        g6=0.0,
        g7=max(0.0, 1.0 - params.g1 - params.g3),
        g8=max(0.0, 1.0 - params.g2 - params.g4),
        g9=0.0,
    )


def gs4_params_from_matrix(matrix) -> GS4Params:
    entries = _entries_of(matrix)
    clip = lambda value: float(min(1.0, max(0.0, value)))  # noqa: E731
    return GS4Params(
        g1=clip(entries[0, 1]),
        g2=clip(entries[0, 2]),
        g3=clip(entries[1, 1]),
        g4=clip(entries[1, 2]),
        g5=clip(entries[0, 3]),
        g6=clip(entries[1, 3]),
        g7=clip(entries[2, 1]),
        g8=clip(entries[2, 2]),
        g9=clip(entries[2, 3]),
    )


def complete_thermalization(system: ThermalSystem) -> GibbsStochasticMatrix:
    gibbs = gibbs_state(system).probs
    return as_gibbs_matrix(np.outer(gibbs, np.ones(system.size)), system)


def two_level_thermalization(system: ThermalSystem, i: int, j: int, lam: float) -> GibbsStochasticMatrix:
    """(1 - lam) * identity + lam * (full thermalization of the pair i, j)."""
    n = system.size
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid level pair ({i}, {j})")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda = {lam} is outside [0, 1]")
    weights = gibbs_weights(system)
    pair_weight = weights[i] + weights[j]
    if pair_weight <= 0.0:
        raise ValueError(f"levels {i} and {j} both have zero Gibbs weight")
    block = np.array([[weights[i], weights[i]], [weights[j], weights[j]]]) / pair_weight
    entries = np.eye(n)
    idx = np.ix_([i, j], [i, j])
    entries[idx] = (1.0 - lam) * np.eye(2) + lam * block
    return as_gibbs_matrix(entries, system)


def _gs3_feasible(entries: np.ndarray) -> np.ndarray:
    return np.all(entries >= 0.0, axis=(-2, -1))


def sample_gs3_batch(
    rng: np.random.Generator,
    instance: PhotoisomerInstance,
    size: int,
    max_rejections: int = MAX_REJECTIONS,
) -> np.ndarray:
    """Uniform-in-box rejection samples of (g1, g2, g3, g4); returns an array of shape (size, 4)."""
    if size < 1:
        raise ValueError("size must be positive")
    accepted = []
    count = 0
    rejections = 0
    while count < size:
        draws = rng.random((SAMPLER_CHUNK, 4))
        entries = gs3_entries(draws[:, 0], draws[:, 1], draws[:, 2], draws[:, 3], instance.delta, instance.w)
        ok = _gs3_feasible(entries)
        hits = draws[ok]
        needed = size - count
        if hits.shape[0] >= needed:
            last = int(np.flatnonzero(ok)[needed - 1])
            rejections += last + 1 - needed
            accepted.append(hits[:needed])
            count = size
            break
        rejections += SAMPLER_CHUNK - hits.shape[0]
        accepted.append(hits)
        count += hits.shape[0]
        if (count == 0 and rejections >= max_rejections) or rejections >= max_rejections * size:
            raise SamplerExhausted(
                f"GS3 sampler exhausted after {rejections} rejections "
                f"(delta={instance.delta}, w={instance.w})"
            )
    logger.debug("GS3 sampler: %d accepted, %d rejected", size, rejections)
    return np.concatenate(accepted, axis=0)


def sample_gs3(seed: int, instance: PhotoisomerInstance) -> GS3Params:
    rng = np.random.default_rng(seed)
    g1, g2, g3, g4 = sample_gs3_batch(rng, instance, 1)[0]
    return GS3Params(g1=g1, g2=g2, g3=g3, g4=g4)


def _northwest_corner_plans(weights: np.ndarray, row_orders: np.ndarray, col_orders: np.ndarray) -> np.ndarray:
    """Vertices of the transportation polytope with both marginals equal to ``weights``."""
    size, n = row_orders.shape
    batch = np.arange(size)
    supply = weights[row_orders].astype(float)
    demand = weights[col_orders].astype(float)
    plans = np.zeros((size, n, n))
    i = np.zeros(size, dtype=int)
    j = np.zeros(size, dtype=int)
    for _ in range(4 * n):
        active = (i < n) & (j < n)
        if not active.any():
            break
        ii = np.minimum(i, n - 1)
        jj = np.minimum(j, n - 1)
        s = supply[batch, ii]
        d = demand[batch, jj]
        amount = np.where(active, np.minimum(s, d), 0.0)
        plans[batch, row_orders[batch, ii], col_orders[batch, jj]] += amount
        supply[batch, ii] = s - amount
        demand[batch, jj] = d - amount
        row_done = supply[batch, ii] <= demand[batch, jj]
        i = np.where(active & row_done, i + 1, i)
        j = np.where(active & ~row_done, j + 1, j)
    return plans


def sample_gs_matrices(
    rng: np.random.Generator,
    system: ThermalSystem,
    size: int,
    vertices: int = 4,
    chunk: int = 20000,
) -> np.ndarray:
    """Random Gibbs-stochastic matrices as Dirichlet mixtures of transport-polytope vertices.

    The flow J_ij = G_ij w_j has both marginals equal to the Gibbs weights, so
    G = J diag(w)^-1 is column-stochastic and fixes the Gibbs vector.
    """
    weights = np.asarray(gibbs_weights(system), dtype=float) / math.exp(log_partition(system))
    if np.any(weights <= 0.0):
        raise ValueError("transport sampling needs every level to have positive Gibbs weight")
    n = system.size
    blocks = []
    remaining = size
    while remaining > 0:
        m = min(chunk, remaining)
        plans = np.zeros((m, n, n))
        mix = rng.dirichlet(np.ones(vertices), size=m)
        for k in range(vertices):
            row_orders = np.argsort(rng.random((m, n)), axis=1)
            col_orders = np.argsort(rng.random((m, n)), axis=1)
            plans += mix[:, k, None, None] * _northwest_corner_plans(weights, row_orders, col_orders)
        matrices = plans / weights[None, None, :]
        matrices /= matrices.sum(axis=1, keepdims=True)
        blocks.append(matrices)
        remaining -= m
    return np.concatenate(blocks, axis=0)


def sample_gs4_batch(
    rng: np.random.Generator,
    delta: float,
    w: float,
    w_prime: float,
    size: int,
) -> np.ndarray:
    system = ThermalSystem((0.0, delta, w, w_prime))
    return sample_gs_matrices(rng, system, size)


def _stable_quadratic_roots(s: float, p: float) -> tuple[complex, complex, bool]:
    """Roots of x^2 - s x + p, larger real part first."""
    disc = s * s - 4.0 * p
    scale = max(1.0, s * s)
    if abs(disc) <= 1e-14 * scale:
        disc = 0.0
    if disc < 0.0:
        root = complex(s / 2.0, math.sqrt(-disc) / 2.0)
        return root, root.conjugate(), True
    if disc == 0.0:
        return s / 2.0, s / 2.0, False
    sq = math.sqrt(disc)
    big = 0.5 * (s + math.copysign(sq, s))
    other = p / big
    first, second = sorted((big, other), reverse=True)
    return first, second, False


def spectrum3(matrix) -> Spectrum3:
    """Deflates the Perron eigenvalue 1 and solves the remaining quadratic."""
    entries = _entries_of(matrix)
    if entries.shape != (3, 3):
        raise ValueError("spectrum3 needs a 3x3 matrix")
    trace = float(np.trace(entries))
    minors = 0.0
    for a, b in ((0, 1), (0, 2), (1, 2)):
        minors += entries[a, a] * entries[b, b] - entries[a, b] * entries[b, a]
    s = trace - 1.0
    p = float(minors) - s
    lambda1, lambda2, is_complex = _stable_quadratic_roots(s, p)
    return Spectrum3(lambda1=lambda1, lambda2=lambda2, is_complex=is_complex)


def f_lambda_array(l1, l2) -> np.ndarray:
    """Embedding bound f(l1, l2), written through exprel so l1 == l2 is its continuity limit."""
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    if np.any(l1 <= 0.0) or np.any(l2 <= 0.0):
        raise ValueError("f(l1, l2) needs positive eigenvalues")
    x = np.log(l1)
    y = np.log(l2)
    return 1.0 - l1 * (1.0 - x * exprel(y - x))


def f_lambda(l1: float, l2: float) -> float:
    return float(f_lambda_array(l1, l2))


def embeddability_check(matrix, system: ThermalSystem) -> EmbeddabilityVerdict:
    entries = _entries_of(matrix)
    spectrum = spectrum3(entries)
    values = spectrum.values
    if spectrum.is_complex:
        logger.warning("Embeddability undetermined: complex spectrum %s", values)
        return EmbeddabilityVerdict(Verdict.UNDETERMINED, None, "complex spectrum", values)
    l1, l2 = float(spectrum.lambda1), float(spectrum.lambda2)
    if abs(l1) <= TOL_ZERO_EIGENVALUE or abs(l2) <= TOL_ZERO_EIGENVALUE:
        return EmbeddabilityVerdict(Verdict.NOT_EMBEDDABLE, "a", "zero eigenvalue", values)
    if l1 < 0.0 or l2 < 0.0:
        if abs(l1 - l2) > TOL_EMBED:
            return EmbeddabilityVerdict(
                Verdict.NOT_EMBEDDABLE, "b", "negative eigenvalue with lambda1 != lambda2", values
            )
        logger.warning("Embeddability undetermined: equal negative eigenvalues %s", values)
        return EmbeddabilityVerdict(Verdict.UNDETERMINED, "b", "equal negative eigenvalues", values)
    bound = f_lambda(l1, l2)
    gibbs = gibbs_state(system).probs
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            required = bound * gibbs[i]
            if entries[i, j] < required - TOL_EMBED:
                return EmbeddabilityVerdict(
                    Verdict.NOT_EMBEDDABLE,
                    "c",
                    f"entry ({i}, {j}) = {entries[i, j]:.6g} is below f * gibbs_{i} = {required:.6g}",
                    values,
                )
    return EmbeddabilityVerdict(Verdict.EMBEDDABLE, "c", f"all off-diagonal entries >= f * gibbs (f = {bound:.6g})", values)


def thermal_rate_matrix(system: ThermalSystem, base_rates) -> RateMatrix:
    """Detailed-balance generator: Q_ij = r_ij w_i for i != j, columns summing to zero."""
    rates = np.array(base_rates, dtype=float)
    n = system.size
    if rates.shape != (n, n):
        raise ValueError(f"base rates must be a {n}x{n} matrix")
    if np.any(rates < 0.0):
        raise ValueError("base rates must be non-negative")
    if not np.allclose(rates, rates.T, rtol=0.0, atol=1e-12):
        raise ValueError("base rates must be symmetric")
    weights = gibbs_weights(system)
    entries = rates * weights[:, None]
    np.fill_diagonal(entries, 0.0)
    np.fill_diagonal(entries, -entries.sum(axis=0))
    entries.flags.writeable = False
    return RateMatrix(entries=entries, system=system)


def exp_rate(rate: RateMatrix, t: float) -> GibbsStochasticMatrix:
    if t < 0.0:
        raise ValueError("t must be non-negative")
    entries = expm(rate.entries * t)
    entries[(entries < 0.0) & (entries >= -TOL_M)] = 0.0
    entries = entries / entries.sum(axis=0, keepdims=True)
    return as_gibbs_matrix(entries, rate.system)


def matrix_to_json(matrix: GibbsStochasticMatrix) -> dict:
    return {
        "energies": energies_to_json(matrix.system.energies),
        "matrix": matrix.entries.tolist(),
    }


def matrix_from_json(payload: dict) -> tuple[np.ndarray, ThermalSystem]:
    """Parses the matrix file format without validating Gibbs-stochasticity."""
    parsed = MatrixFile.model_validate(payload)
    return np.array(parsed.matrix, dtype=float), parsed.system()
